#pragma once

#include "quadrics/core/quadric.hpp"

namespace quadrics::metrics {

struct DistanceResult {
  double distance = 0.0;
  Vec3 foot = Vec3::Zero();
  /// Set when the directional search fallback produced the foot point: the
  /// gradient vanished at the query, or the gradient walk ended on a
  /// singular point of the surface.
  bool approximate = false;
};

struct DistanceOptions {
  /// Gradient-direction Newton steps after the first-order estimate.
  int newton_steps = 3;
  /// Orthogonality (closest-point) refinement iterations on the surface.
  int refine_steps = 10;
  /// Directions tried by the singular-point fallback.
  int fallback_directions = 64;
};

/// Euclidean distance from points to one quadric surface. Precomputes the
/// normalized matrix once; rank-one quadrics (squared planes) use the exact
/// linear-factor distance since their gradient vanishes on the surface.
class SurfaceDistance {
 public:
  explicit SurfaceDistance(const Quadric& q, DistanceOptions options = {});

  [[nodiscard]] DistanceResult operator()(const Vec3& x) const;
  [[nodiscard]] double distance(const Vec3& x) const { return (*this)(x).distance; }

 private:
  [[nodiscard]] double f(const Vec3& p) const;
  [[nodiscard]] Vec3 grad(const Vec3& p) const;
  [[nodiscard]] Vec3 refine(const Vec3& x, Vec3 p) const;
  [[nodiscard]] bool directional_search(const Vec3& x, Vec3& foot) const;
  [[nodiscard]] bool line_root(const Vec3& x, const Vec3& d, double& s) const;

  Mat3 a_;  // Q33 of the Frobenius-scaled matrix
  Vec3 l_;
  double k_;
  bool rank_one_ = false;
  Vec4 plane_ = Vec4::Zero();  // unit-normal plane for the rank-one case
  DistanceOptions options_;
};

double point_distance(const Quadric& q, const Vec3& x);

}  // namespace quadrics::metrics
