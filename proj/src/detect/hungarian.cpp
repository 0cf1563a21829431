#include "quadrics/detect/detect.hpp"

#include <limits>

namespace quadrics::detect {

// Shortest augmenting path with row/column potentials, O(n^2 m) for n <= m.
std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const Eigen::Index rows = cost.rows(), cols = cost.cols();
  if (rows == 0 || cols == 0) return std::vector<int>(static_cast<std::size_t>(rows), -1);
  if (!cost.allFinite()) throw InvalidArgument("assignment costs must be finite");
  if (rows > cols) {
    const std::vector<int> t = hungarian(cost.transpose());
    std::vector<int> out(static_cast<std::size_t>(rows), -1);
    for (std::size_t c = 0; c < t.size(); ++c) {
      if (t[c] >= 0) out[static_cast<std::size_t>(t[c])] = static_cast<int>(c);
    }
    return out;
  }
  const auto n = static_cast<std::size_t>(rows), m = static_cast<std::size_t>(cols);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);  // p[j]: row matched to column j (1-based)
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                           u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) out[p[j] - 1] = static_cast<int>(j - 1);
  }
  return out;
}

double relaxed_iou(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw InvalidArgument("membership columns differ in length");
  const double inter = a.dot(b);
  const double uni = a.lpNorm<1>() + b.lpNorm<1>() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Assignment match_segments(const SegmentMembership& predicted, const SegmentMembership& truth) {
  if (predicted.count < 1 || truth.count < 1) throw InvalidArgument("empty membership");
  if (predicted.size() != truth.size()) throw InvalidArgument("memberships differ in size");
  // Intersections by counting label pairs; binary columns make RIoU exact.
  Eigen::MatrixXd inter = Eigen::MatrixXd::Zero(predicted.count, truth.count);
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    inter(predicted.labels[static_cast<std::size_t>(i)], truth.labels[static_cast<std::size_t>(i)]) += 1.0;
  }
  const Eigen::VectorXd ps = inter.rowwise().sum();
  const Eigen::RowVectorXd ts = inter.colwise().sum();
  Eigen::MatrixXd cost(predicted.count, truth.count);
  for (int i = 0; i < predicted.count; ++i) {
    for (int j = 0; j < truth.count; ++j) {
      const double uni = ps(i) + ts(j) - inter(i, j);
      cost(i, j) = 1.0 - (uni > 0.0 ? inter(i, j) / uni : 0.0);
    }
  }
  const std::vector<int> match = hungarian(cost);
  Assignment a;
  a.predicted_to_truth = match;
  a.truth_to_predicted.assign(static_cast<std::size_t>(truth.count), -1);
  for (int i = 0; i < predicted.count; ++i) {
    const int j = match[static_cast<std::size_t>(i)];
    if (j >= 0) {
      a.truth_to_predicted[static_cast<std::size_t>(j)] = i;
      a.total_cost += cost(i, j);
    }
  }
  return a;
}

}  // namespace quadrics::detect
