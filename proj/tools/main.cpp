#include "quadrics/cli/app.hpp"

#include <iostream>

int main(int argc, char** argv) { return quadrics::cli::run(argc, argv, std::cout, std::cerr); }
