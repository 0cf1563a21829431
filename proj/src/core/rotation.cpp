#include "quadrics/core/rotation.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace quadrics {

Mat3 skew(const Vec3& w) {
  Mat3 S;
  S << 0.0, -w(2), w(1),  //
      w(2), 0.0, -w(0),   //
      -w(1), w(0), 0.0;
  return S;
}

Mat3 exp_so3(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 W = skew(w);
  if (theta < 1e-8) {
    return Mat3::Identity() + W + 0.5 * W * W;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * W + b * W * W;
}

Vec3 log_so3(const Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const double orth = (R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  return orth <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Mat3 rotation_from_uniforms(double u1, double u2, double u3) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const Eigen::Quaterniond q(b * std::cos(two_pi * u3), a * std::sin(two_pi * u2),
                             a * std::cos(two_pi * u2), b * std::sin(two_pi * u3));
  return q.normalized().toRotationMatrix();
}

double rotation_distance(const Mat3& a, const Mat3& b) {
  return log_so3(a.transpose() * b).norm();
}

}  // namespace quadrics
