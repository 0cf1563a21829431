#pragma once

#include "quadrics/core/decomposition.hpp"
#include "quadrics/dataset/rng.hpp"

#include <json.hpp>

#include <array>
#include <vector>

namespace quadrics::dataset {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Scalar type of stored coordinates and normals.
enum class Precision { Float32, Float64 };

struct GeneratorConfig {
  std::uint64_t seed = 0;
  int points_per_segment = 2048;
  double noise_amplitude = 0.01;
  double trim_probability = 0.3;
  int min_segments = 3;
  int max_segments = 8;
  /// Relative weights of plane, sphere, cylinder, cone.
  std::array<double, 4> type_mix{0.25, 0.25, 0.25, 0.25};
  Range plane_extent{0.2, 0.8};
  Range sphere_radius{0.1, 0.4};
  Range cylinder_radius{0.05, 0.3};
  Range cylinder_length{0.2, 0.8};
  /// Degrees.
  Range cone_half_angle{10.0, 45.0};
  Range cone_height{0.2, 0.8};
  /// Minimum distance between patch centers within an object.
  double min_separation = 0.2;
  /// Probability that a sphere is sampled whole rather than as a cap.
  double full_sphere_probability = 0.5;
  Precision precision = Precision::Float32;

  /// Throws InvalidArgument on inconsistent values.
  void validate() const;
};

nlohmann::json to_json(const GeneratorConfig& c);
/// Fills a config from JSON; unknown keys are rejected with SchemaError.
GeneratorConfig generator_config_from_json(const nlohmann::json& j,
                                           const GeneratorConfig& base = {});

struct SegmentTruth {
  Quadric quadric{Vec10::Unit(0)};  // normalized
  QuadricType type;
  CanonicalDecomposition decomposition;
  Eigen::Index point_count = 0;
  /// Patch center used for placement.
  Vec3 center = Vec3::Zero();
};

struct GeneratedSegment {
  Segment segment;  // noisy points with exact normals
  Points clean;     // points before noise
  SegmentTruth truth;
};

struct GeneratedObject {
  PointCloud cloud;
  /// Source segment of every point (GT membership W in label form).
  std::vector<int> labels;
  std::vector<SegmentTruth> segments;
  Points clean;
};

GeneratedSegment generate_segment(const QuadricType& type, const GeneratorConfig& config,
                                  Rng& rng);
GeneratedObject generate_object(const GeneratorConfig& config, Rng& rng);

/// Item i of a corpus uses Rng(seed ^ i).
GeneratedObject generate_item(const GeneratorConfig& config, std::uint64_t index);

}  // namespace quadrics::dataset
