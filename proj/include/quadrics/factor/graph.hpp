#pragma once

#include "quadrics/factor/factor.hpp"
#include "quadrics/factor/lm.hpp"

#include <vector>

namespace quadrics::factor {

struct FactorBinding {
  QuadricMeasurement measurement;
  int observer = 0;
  int quadric = 0;
};

struct GraphState {
  std::vector<ObserverPose> observers;
  std::vector<QuadricState> quadrics;
};

struct FactorGraph {
  std::vector<FactorBinding> factors;
  GraphState initial;
  /// Variables held constant (gauge anchors). Empty means all free.
  std::vector<bool> observer_fixed;
  std::vector<bool> quadric_fixed;
};

struct GraphResult {
  GraphState state;
  bool converged = false;
  int iterations = 0;
  double initial_error = 0.0;
  /// Sum of squared stacked errors at the returned state.
  double final_error = 0.0;
};

/// 0.5 * sum of squared factor errors.
double graph_cost(const FactorGraph& graph, const GraphState& state);

/// Joint optimization of all free variables with a sparse LM.
/// Throws InvalidArgument when a factor references a missing variable or a
/// free variable is bound by no factor.
GraphResult solve_lm(const FactorGraph& graph, const LMConfig& config = {});

}  // namespace quadrics::factor
