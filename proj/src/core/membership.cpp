#include "quadrics/core/membership.hpp"

#include <string>

namespace quadrics {

SegmentMembership::SegmentMembership(std::vector<int> labels_in, int count_in)
    : labels(std::move(labels_in)), count(count_in) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= count) {
      throw InvalidArgument("membership label " + std::to_string(labels[i]) + " at row " +
                            std::to_string(i) + " outside [0, " + std::to_string(count) + ")");
    }
  }
}

Eigen::MatrixXd SegmentMembership::matrix() const {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(size(), count);
  for (Eigen::Index i = 0; i < size(); ++i) W(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  return W;
}

Eigen::VectorXd SegmentMembership::column(int k) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (labels[static_cast<std::size_t>(i)] == k) w(i) = 1.0;
  }
  return w;
}

std::vector<Eigen::Index> SegmentMembership::members(int k) const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (labels[static_cast<std::size_t>(i)] == k) out.push_back(i);
  }
  return out;
}

std::vector<Eigen::Index> SegmentMembership::column_sizes() const {
  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(count), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

std::vector<int> Assignment::unmatched_predicted() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < predicted_to_truth.size(); ++i) {
    if (predicted_to_truth[i] < 0) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace quadrics
