#include "quadrics/core/normals.hpp"

#include "quadrics/core/kdtree.hpp"

#include <algorithm>

namespace quadrics {

LocalShape local_shape(const Points& points, int k) {
  const Eigen::Index n = points.rows();
  if (k < 3) throw InvalidArgument("local shape needs k >= 3");
  if (n <= k) throw InvalidArgument("local shape needs more points than neighbors");
  const KdTree tree(KdTree::Matrix(points), 16);
  LocalShape out;
  out.normals.resize(n, 3);
  out.curvature.resize(n, 3);
  out.degenerate.assign(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 x = points.row(i).transpose();
    const auto nb = tree.knn(x, k);
    Vec3 mean = Vec3::Zero();
    for (const auto& m : nb) mean += points.row(m.index).transpose();
    mean /= static_cast<double>(nb.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& m : nb) {
      const Vec3 d = points.row(m.index).transpose() - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(nb.size());
    const Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const Vec3 ev = es.eigenvalues().cwiseMax(0.0);
    Vec3 normal = es.eigenvectors().col(0);
    const double scale = std::max(ev(2), 1e-300);
    if (ev(2) <= 1e-24 || ev(1) <= 1e-12 * scale) {
      out.degenerate[static_cast<std::size_t>(i)] = true;
      if (ev(2) <= 1e-24) normal = Vec3::UnitZ();
    }
    if (normal.dot(-x) < 0.0) normal = -normal;
    out.normals.row(i) = normal.transpose();
    out.curvature.row(i) = ev.transpose();
  }
  return out;
}

Points estimate_normals(const Points& points, int k) { return local_shape(points, k).normals; }

}  // namespace quadrics
