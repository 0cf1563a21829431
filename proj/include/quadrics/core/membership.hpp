#pragma once

#include "quadrics/core/types.hpp"

#include <vector>

namespace quadrics {

/// Hard point-to-segment membership. Stored as one label per point, which is
/// the binary row-stochastic matrix W (N x K) in compact form: every row has
/// exactly one 1.
struct SegmentMembership {
  std::vector<int> labels;
  int count = 0;
  /// Optional cluster centers (K x F) in the feature space that produced them.
  Eigen::MatrixXd centers;

  SegmentMembership() = default;
  SegmentMembership(std::vector<int> labels, int count);

  [[nodiscard]] Eigen::Index size() const { return static_cast<Eigen::Index>(labels.size()); }
  [[nodiscard]] Eigen::MatrixXd matrix() const;
  [[nodiscard]] Eigen::VectorXd column(int k) const;
  [[nodiscard]] std::vector<Eigen::Index> members(int k) const;
  [[nodiscard]] std::vector<Eigen::Index> column_sizes() const;
};

/// One-to-one matching between predicted and ground-truth segments.
struct Assignment {
  /// predicted_to_truth[i] = matched GT index or -1.
  std::vector<int> predicted_to_truth;
  /// truth_to_predicted[j] = matched predicted index or -1.
  std::vector<int> truth_to_predicted;
  double total_cost = 0.0;

  [[nodiscard]] std::vector<int> unmatched_predicted() const;
};

}  // namespace quadrics
