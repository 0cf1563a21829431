#pragma once

#include "quadrics/core/types.hpp"

#include <vector>

namespace quadrics {

struct LocalShape {
  Points normals;
  /// Covariance eigenvalues per point, ascending (N x 3).
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> curvature;
  /// Points whose neighborhood covariance had rank < 2 (normal arbitrary).
  std::vector<bool> degenerate;
};

/// PCA over the k nearest neighbors of each point. Normals are the smallest
/// covariance eigenvectors, flipped to face the origin.
LocalShape local_shape(const Points& points, int k);

/// Convenience: only the normals from local_shape.
Points estimate_normals(const Points& points, int k = 16);

}  // namespace quadrics
