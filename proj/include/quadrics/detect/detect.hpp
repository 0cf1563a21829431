#pragma once

#include "quadrics/core/membership.hpp"
#include "quadrics/fit/fit.hpp"

#include <string>
#include <vector>

namespace quadrics::detect {

/// Per-point features: position(3), estimated normal(3), curvature triple(3).
struct PointFeatures {
  Eigen::MatrixXd Z;
  /// Points whose neighborhood was too degenerate for a reliable normal.
  std::vector<bool> degenerate;
};

struct FeatureWeights {
  double position = 1.0;
  double normal = 1.0;
  double curvature = 1.0;
};

/// Each block is scaled so its total variance over the cloud is one, then by
/// its weight. Throws InvalidArgument unless N > k_neighbors >= 8.
PointFeatures compute_features(const PointCloud& cloud, int k_neighbors,
                               const FeatureWeights& weights = {});

struct MeanShiftOptions {
  int max_iters = 50;
  /// Stop once every row moves less than tolerance * bandwidth.
  double tolerance = 1e-5;
  /// Above this many rows the kernel is truncated at `truncation` bandwidths.
  Eigen::Index dense_limit = 4096;
  double truncation = 3.0;
  /// Blurring moves the kernel centers with the rows (Z <- K D^-1 Z). When
  /// false the kernel stays on the input rows and every row climbs to a mode
  /// of the input's kernel density.
  bool blurring = true;
};

struct MeanShiftResult {
  Eigen::MatrixXd Z;
  int iterations = 0;
  bool converged = false;
};

/// Mean shift with unit step: every row moves to its Gaussian kernel-weighted
/// mean, K_ij = exp(-|z_i - z_j|^2 / (2 h^2)).
MeanShiftResult mean_shift(const Eigen::MatrixXd& Z, double bandwidth,
                           const MeanShiftOptions& options = {});

struct ClusterOptions {
  /// Kernel width of the density that orders NMS candidates; <= 0 uses the
  /// NMS radius.
  double density_bandwidth = 0.0;
  /// Candidates below this fraction of the peak density are not accepted.
  double min_relative_density = 0.0;
  /// Clusters smaller than this are dissolved into their nearest neighbor.
  int min_cluster_size = 1;
};

/// Density-ordered greedy NMS over the shifted rows, then nearest-center
/// assignment. At least one center always survives.
SegmentMembership extract_clusters(const Eigen::MatrixXd& shifted, double nms_radius,
                                   const ClusterOptions& options = {});

/// Rows of the cloud belonging to segment k; throws DegenerateInput if empty.
Segment extract_segment(const PointCloud& cloud, const SegmentMembership& membership, int k);

/// Mode of the point labels within each segment; ties go to the simpler type.
std::vector<QuadricType> vote_type(const std::vector<QuadricType>& point_types,
                                   const SegmentMembership& membership);

/// Minimum-cost assignment of a rectangular cost matrix (rows to columns).
/// Returns the column of every row, -1 for unassigned rows.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

/// Relaxed IoU <a, b> / (|a|_1 + |b|_1 - <a, b>).
double relaxed_iou(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// One-to-one matching minimizing sum of 1 - RIoU over matched pairs.
Assignment match_segments(const SegmentMembership& predicted, const SegmentMembership& truth);

struct ParseConfig {
  int k_neighbors = 16;
  FeatureWeights feature_weights;
  double bandwidth = 0.25;
  double nms_radius = 0.25;
  int max_shift_iters = 50;
  double shift_tolerance = 1e-5;
  /// Mean shift runs on an evenly spaced subset of this many points; the
  /// rest inherit the label of their nearest subset point in feature space.
  int max_shift_points = 1024;
  double min_relative_density = 0.0;
  /// Fraction of the cloud below which a cluster is dissolved.
  double min_cluster_fraction = 0.01;
  std::vector<QuadricType> candidate_types = primitive_types();
  /// Adjacent segments merge when their union residual stays below
  /// merge_factor * (size-weighted residual of the parts) + merge_tolerance.
  double merge_factor = 1.5;
  double merge_tolerance = 0.002;
  /// Points used per fit while deciding merges.
  int merge_sample = 192;
  /// Reassign points to their nearest fitted surface and refit once.
  bool relabel = true;
  fit::FitOptions fit;
};

struct ParseResult {
  SegmentMembership membership;
  std::vector<fit::FitResult> fits;
  std::vector<QuadricType> types;
  /// Per segment: empty when the fit succeeded, else the failure reason.
  std::vector<std::string> errors;
  /// Segment count straight out of clustering, before merging.
  int initial_segments = 0;
};

/// compute_features -> mean_shift -> extract_clusters -> fit_auto per
/// segment -> merge -> relabel -> vote_type -> fit_constrained. Points are
/// processed in lexicographic order, so the result depends only on the set
/// of points, not on their order.
ParseResult parse(const PointCloud& cloud, const ParseConfig& config = {});

}  // namespace quadrics::detect
