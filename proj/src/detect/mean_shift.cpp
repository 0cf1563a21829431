#include "quadrics/core/kdtree.hpp"
#include "quadrics/detect/detect.hpp"

#include <cmath>
#include <optional>

namespace quadrics::detect {
namespace {

// Kernel-weighted means of the data rows D around every query row.
Eigen::MatrixXd dense_step(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& D, double inv2h2) {
  const Eigen::VectorXd sq = Q.rowwise().squaredNorm();
  const Eigen::VectorXd sd = D.rowwise().squaredNorm();
  Eigen::MatrixXd K = Q * D.transpose();
  for (Eigen::Index j = 0; j < K.cols(); ++j) {
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      const double d2 = std::max(0.0, sq(i) + sd(j) - 2.0 * K(i, j));
      K(i, j) = std::exp(-d2 * inv2h2);
    }
  }
  const Eigen::VectorXd deg = K.rowwise().sum();
  Eigen::MatrixXd out = K * D;
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= deg(i);
  return out;
}

Eigen::MatrixXd truncated_step(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& D,
                               const KdTree& tree, double h, double truncation) {
  const double inv2h2 = 1.0 / (2.0 * h * h);
  Eigen::MatrixXd out(Q.rows(), Q.cols());
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    const auto nb = tree.radius(Q.row(i).transpose(), truncation * h);
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(Q.cols());
    double w = 0.0;
    for (const auto& n : nb) {
      const double k = std::exp(-n.squared_distance * inv2h2);
      acc += k * D.row(n.index);
      w += k;
    }
    // A query farther than the cutoff from all data stays put.
    out.row(i) = w > 0.0 ? Eigen::RowVectorXd(acc / w) : Eigen::RowVectorXd(Q.row(i));
  }
  return out;
}

}  // namespace

MeanShiftResult mean_shift(const Eigen::MatrixXd& Z, double bandwidth,
                           const MeanShiftOptions& options) {
  if (!(bandwidth > 0.0)) throw InvalidArgument("bandwidth must be positive");
  MeanShiftResult r;
  r.Z = Z;
  if (Z.rows() == 0) {
    r.converged = true;
    return r;
  }
  const bool dense = Z.rows() <= options.dense_limit;
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  std::optional<KdTree> fixed_tree;
  if (!options.blurring && !dense) fixed_tree.emplace(KdTree::Matrix(Z));
  for (int it = 0; it < options.max_iters; ++it) {
    const Eigen::MatrixXd& data = options.blurring ? r.Z : Z;
    Eigen::MatrixXd next;
    if (dense) {
      next = dense_step(r.Z, data, inv2h2);
    } else if (fixed_tree) {
      next = truncated_step(r.Z, data, *fixed_tree, bandwidth, options.truncation);
    } else {
      next = truncated_step(r.Z, data, KdTree(KdTree::Matrix(data)), bandwidth, options.truncation);
    }
    const double moved = (next - r.Z).rowwise().norm().maxCoeff();
    r.Z = std::move(next);
    r.iterations = it + 1;
    if (moved < options.tolerance * bandwidth) {
      r.converged = true;
      break;
    }
  }
  return r;
}

}  // namespace quadrics::detect
