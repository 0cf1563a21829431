#include "quadrics/core/normals.hpp"
#include "quadrics/detect/detect.hpp"

#include <cmath>

namespace quadrics::detect {
namespace {

void normalize_block(Eigen::MatrixXd& Z, int col, double weight) {
  auto block = Z.middleCols(col, 3);
  const Eigen::RowVectorXd mean = block.colwise().mean();
  const double var = (block.rowwise() - mean).squaredNorm() / static_cast<double>(Z.rows());
  // A constant block (all normals equal on a plane) carries only rounding
  // noise, which must not be blown up to unit variance.
  const double floor = 1e-24 * (1.0 + mean.squaredNorm());
  const double s = var > floor ? weight / std::sqrt(var) : 0.0;
  block = (block.rowwise() - mean) * s;
}

}  // namespace

PointFeatures compute_features(const PointCloud& cloud, int k_neighbors,
                               const FeatureWeights& weights) {
  if (k_neighbors < 8) throw InvalidArgument("k_neighbors must be at least 8");
  if (cloud.size() <= k_neighbors) throw InvalidArgument("cloud must have more than k points");
  const LocalShape shape = local_shape(cloud.points, k_neighbors);
  PointFeatures f;
  f.Z.resize(cloud.size(), 9);
  f.Z.leftCols(3) = cloud.points;
  f.Z.middleCols(3, 3) = shape.normals;
  f.Z.rightCols(3) = shape.curvature;
  normalize_block(f.Z, 0, weights.position);
  normalize_block(f.Z, 3, weights.normal);
  normalize_block(f.Z, 6, weights.curvature);
  f.degenerate = shape.degenerate;
  return f;
}

}  // namespace quadrics::detect
