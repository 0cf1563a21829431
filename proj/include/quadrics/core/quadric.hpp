#pragma once

#include "quadrics/core/types.hpp"

namespace quadrics {

/// Implicit quadric surface
///   f(x) = Ax^2 + By^2 + Cz^2 + 2Dxy + 2Exz + 2Fyz + 2Gx + 2Hy + 2Iz + J
/// stored as the coefficient vector [A, B, C, D, E, F, G, H, I, J].
///
/// The symmetric 4x4 matrix view is derived on demand, so it is symmetric by
/// construction. Construction rejects non-finite coefficients and an all-zero
/// quadratic part.
class Quadric {
 public:
  explicit Quadric(const Vec10& coeffs);

  /// Reads the upper triangle of `Q`; throws if `Q` is not symmetric to 1e-12.
  static Quadric from_matrix(const Mat4& Q);
  /// Builds from the blocks Q33, l, k.
  static Quadric from_blocks(const Mat3& q33, const Vec3& l, double k);

  [[nodiscard]] const Vec10& coeffs() const { return coeffs_; }
  [[nodiscard]] Mat4 matrix() const;
  [[nodiscard]] Mat3 q33() const;
  [[nodiscard]] Vec3 linear() const { return coeffs_.segment<3>(6); }
  [[nodiscard]] double constant() const { return coeffs_(9); }

  [[nodiscard]] double evaluate(const Vec3& x) const;
  /// Returns the 3x4 gradient operator; gradient(x) = grad_op() * [x; 1].
  [[nodiscard]] Eigen::Matrix<double, 3, 4> gradient_operator() const;
  [[nodiscard]] Vec3 gradient(const Vec3& x) const;

  [[nodiscard]] Quadric scaled(double alpha) const;
  /// The surface mapped through y = R x + t.
  [[nodiscard]] Quadric transformed(const Mat3& R, const Vec3& t) const;

  /// 10 monomials whose dot product with coeffs() evaluates f.
  static Vec10 monomials(const Vec3& x);

 private:
  Vec10 coeffs_;
};

double evaluate(const Quadric& q, const Vec3& x);
Vec3 gradient(const Quadric& q, const Vec3& x);

}  // namespace quadrics
