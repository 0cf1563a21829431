#pragma once

#include "quadrics/dataset/generator.hpp"
#include "quadrics/detect/detect.hpp"
#include "quadrics/metrics/metrics.hpp"

#include <filesystem>

namespace quadrics::cli {

struct StructureMapConfig {
  int angular_segments = 32;
  int linear_segments = 16;
  /// Inlier bounding boxes grow by this fraction of their diagonal.
  double padding = 0.05;
};

struct ToolkitConfig {
  dataset::GeneratorConfig generator;
  /// Corpus size written by `generate` unless --objects is given.
  std::size_t objects = 1000;
  detect::ParseConfig detect;
  std::vector<double> epsilons{0.01, 0.02};
  metrics::ResidualGrouping residual_grouping = metrics::ResidualGrouping::GroundTruth;
  StructureMapConfig structure_map;
};

/// Sections: generator, corpus, fit, lm, detect, metrics, structure_map.
/// Unknown keys anywhere are rejected with SchemaError naming the path.
ToolkitConfig config_from_json(const nlohmann::json& j, const ToolkitConfig& base = {});
nlohmann::json to_json(const ToolkitConfig& c);
ToolkitConfig load_config(const std::filesystem::path& path);

}  // namespace quadrics::cli
