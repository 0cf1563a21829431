#include "quadrics/factor/factor.hpp"

#include "quadrics/core/rotation.hpp"

#include <cmath>

namespace quadrics::factor {

namespace {

// Homogeneous mixed-sign forms (cones) are normalized by the Frobenius norm,
// which changes under translation. Rescaling so the minority-sign axis has
// unit magnitude makes lambda comparable across frames.
double invariant_rescale(const CanonicalDecomposition& c, const Tolerances& tol) {
  const double max_abs = c.lambdas.cwiseAbs().maxCoeff();
  if (std::abs(c.c44) > tol.zero * max_abs) return 1.0;
  int pos = 0, neg = 0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(c.lambdas(i)) <= tol.zero * max_abs) continue;
    (c.lambdas(i) > 0 ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) return 1.0;
  const int minority = pos < neg ? 1 : -1;
  double m = 0.0;
  for (int i = 0; i < 3; ++i) {
    if ((c.lambdas(i) > 0 ? 1 : -1) == minority) m = std::max(m, std::abs(c.lambdas(i)));
  }
  return 1.0 / m;
}

}  // namespace

QuadricMeasurement QuadricMeasurement::from_quadric(const Quadric& observed,
                                                    const Tolerances& tol) {
  const CanonicalDecomposition c = decompose(observed, tol);
  const double beta = invariant_rescale(c, tol);
  QuadricMeasurement m;
  m.V = c.rotation;
  m.lambda = beta * c.lambdas;
  m.l = beta * normalize(observed, tol).linear();
  m.masks = c.masks;
  return m;
}

Quadric observe(const Quadric& world, const ObserverPose& pose) {
  const Mat3 Rt = pose.rotation.transpose();
  return world.transformed(Rt, -Rt * pose.translation);
}

QuadricState state_from_quadric(const Quadric& world, const Tolerances& tol) {
  const CanonicalDecomposition c = decompose(world, tol);
  const double beta = invariant_rescale(c, tol);
  Vec3 scale = c.scale;
  for (int i = 0; i < 3; ++i) {
    if (c.masks.scale[i]) scale(i) = std::sqrt(1.0 / std::abs(beta * c.lambdas(i)));
  }
  return {c.rotation, c.translation, scale};
}

Eigen::Matrix<double, 15, 1> FactorError::stacked() const {
  Eigen::Matrix<double, 15, 1> e;
  e << e_R, e_t, e_s;
  return e;
}

FactorError error(const QuadricMeasurement& m, const ObserverPose& r, const QuadricState& q) {
  FactorError e;
  const Mat3 dR = r.rotation.transpose() * q.rotation;
  const Vec3 a = q.rotation.transpose() * (q.translation - r.translation);
  const Vec3 b = q.rotation.transpose() * (r.rotation * m.l);
  for (int i = 0; i < 3; ++i) {
    if (m.masks.rotation[i]) {
      e.e_R.segment<3>(3 * i) = Vec3(m.V.col(i)).cross(Vec3(dR.col(i)));
    }
    if (m.masks.translation[i]) e.e_t(i) = m.lambda(i) * a(i) + b(i);
    if (m.masks.scale[i]) {
      e.e_s(i) = q.scale(i) * q.scale(i) - 1.0 / std::abs(m.lambda(i));
    }
  }
  return e;
}

Jacobian jacobian(const QuadricMeasurement& m, const ObserverPose& r, const QuadricState& q) {
  Jacobian J = Jacobian::Zero();
  const Mat3& Rr = r.rotation;
  const Mat3& Rq = q.rotation;
  const Mat3 dR = Rr.transpose() * Rq;
  const Vec3 a = Rq.transpose() * (q.translation - r.translation);
  const Vec3 rl = Rr * m.l;
  const Vec3 b = Rq.transpose() * rl;
  const Mat3 RqT = Rq.transpose();
  for (int i = 0; i < 3; ++i) {
    const Vec3 u = Vec3::Unit(i);
    if (m.masks.rotation[i]) {
      const Mat3 vx = skew(m.V.col(i));
      J.block<3, 3>(3 * i, 0) = vx * skew(dR.col(i));
      J.block<3, 3>(3 * i, 6) = -vx * dR * skew(u);
    }
    if (m.masks.translation[i]) {
      const int row = 9 + i;
      const double lam = m.lambda(i);
      J.block<1, 3>(row, 0) = -(u.transpose() * RqT * Rr * skew(m.l));
      J.block<1, 3>(row, 3) = -lam * RqT.row(i);
      J.block<1, 3>(row, 6) = lam * (u.transpose() * skew(a)) + u.transpose() * skew(b);
      J.block<1, 3>(row, 9) = lam * RqT.row(i);
    }
    if (m.masks.scale[i]) J(12 + i, 12 + i) = 2.0 * q.scale(i);
  }
  return J;
}

ObserverPose retract(const ObserverPose& r, const Eigen::Matrix<double, 6, 1>& d) {
  return {r.rotation * exp_so3(d.head<3>()), r.translation + d.tail<3>()};
}

QuadricState retract(const QuadricState& q, const Eigen::Matrix<double, 9, 1>& d) {
  QuadricState out;
  out.rotation = q.rotation * exp_so3(d.head<3>());
  out.translation = q.translation + d.segment<3>(3);
  out.scale = (q.scale + d.tail<3>()).cwiseAbs();
  return out;
}

}  // namespace quadrics::factor
