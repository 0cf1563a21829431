#include "quadrics/core/quadric.hpp"

#include <cmath>

namespace quadrics {

Quadric::Quadric(const Vec10& coeffs) : coeffs_(coeffs) {
  if (!coeffs_.allFinite()) {
    throw InvalidArgument("quadric coefficients must be finite");
  }
  if (coeffs_.head<6>().cwiseAbs().maxCoeff() == 0.0) {
    throw InvalidArgument("quadric has an all-zero quadratic part");
  }
}

Quadric Quadric::from_matrix(const Mat4& Q) {
  const double scale = std::max(Q.cwiseAbs().maxCoeff(), 1e-300);
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("quadric matrix is not symmetric");
  }
  Vec10 c;
  c << Q(0, 0), Q(1, 1), Q(2, 2), Q(0, 1), Q(0, 2), Q(1, 2), Q(0, 3), Q(1, 3),
      Q(2, 3), Q(3, 3);
  return Quadric(c);
}

Quadric Quadric::from_blocks(const Mat3& q33, const Vec3& l, double k) {
  Mat4 Q;
  Q.topLeftCorner<3, 3>() = 0.5 * (q33 + q33.transpose());
  Q.topRightCorner<3, 1>() = l;
  Q.bottomLeftCorner<1, 3>() = l.transpose();
  Q(3, 3) = k;
  return from_matrix(Q);
}

Mat4 Quadric::matrix() const {
  const auto& c = coeffs_;
  Mat4 Q;
  Q << c(0), c(3), c(4), c(6),  //
      c(3), c(1), c(5), c(7),   //
      c(4), c(5), c(2), c(8),   //
      c(6), c(7), c(8), c(9);
  return Q;
}

Mat3 Quadric::q33() const { return matrix().topLeftCorner<3, 3>(); }

double Quadric::evaluate(const Vec3& x) const {
  return coeffs_.dot(monomials(x));
}

Eigen::Matrix<double, 3, 4> Quadric::gradient_operator() const {
  return 2.0 * matrix().topRows<3>();
}

Vec3 Quadric::gradient(const Vec3& x) const {
  return 2.0 * (q33() * x + linear());
}

Quadric Quadric::scaled(double alpha) const { return Quadric(alpha * coeffs_); }

Quadric Quadric::transformed(const Mat3& R, const Vec3& t) const {
  // x = R^T (y - t), so x_h = T^{-1} y_h and Q' = T^{-T} Q T^{-1}.
  Mat4 inv = Mat4::Identity();
  inv.topLeftCorner<3, 3>() = R.transpose();
  inv.topRightCorner<3, 1>() = -R.transpose() * t;
  Mat4 Q = inv.transpose() * matrix() * inv;
  Q = 0.5 * (Q + Q.transpose());
  return from_matrix(Q);
}

Vec10 Quadric::monomials(const Vec3& x) {
  Vec10 m;
  m << x(0) * x(0), x(1) * x(1), x(2) * x(2), 2.0 * x(0) * x(1),
      2.0 * x(0) * x(2), 2.0 * x(1) * x(2), 2.0 * x(0), 2.0 * x(1),
      2.0 * x(2), 1.0;
  return m;
}

double evaluate(const Quadric& q, const Vec3& x) { return q.evaluate(x); }
Vec3 gradient(const Quadric& q, const Vec3& x) { return q.gradient(x); }

}  // namespace quadrics
