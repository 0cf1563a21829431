#pragma once

#include "quadrics/core/types.hpp"

namespace quadrics {

Mat3 skew(const Vec3& w);
/// Rodrigues exponential map so(3) -> SO(3).
Mat3 exp_so3(const Vec3& w);
/// Inverse of exp_so3 for rotation angles in [0, pi].
Vec3 log_so3(const Mat3& R);

/// True when R R^T = I and det R = 1 within `tol`.
bool is_rotation(const Mat3& R, double tol = 1e-8);

/// Uniform rotation from three uniforms in [0, 1) (Shoemake's quaternion method).
Mat3 rotation_from_uniforms(double u1, double u2, double u3);

/// Angle between two rotations in radians.
double rotation_distance(const Mat3& a, const Mat3& b);

}  // namespace quadrics
