#pragma once

#include "quadrics/core/decomposition.hpp"

namespace quadrics::factor {

struct ObserverPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

/// Quadric landmark: axes (columns of `rotation`, ordered like the
/// descending eigenvalues), center and per-axis scale s_i = sqrt|1/lambda_i|.
struct QuadricState {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
};

/// Eigen-structure of a quadric observed in the observer frame.
struct QuadricMeasurement {
  Mat3 V = Mat3::Identity();
  Vec3 lambda = Vec3::Zero();
  Vec3 l = Vec3::Zero();
  DegeneracyMasks masks;

  /// Reads V, lambda, masks from decompose(q) and l from normalize(q). For
  /// cones lambda and l are rescaled so the axis eigenvalue is -1, which does
  /// not depend on the observer frame.
  static QuadricMeasurement from_quadric(const Quadric& observed, const Tolerances& tol = {});
};

/// The world quadric expressed in the observer frame (x_r = R_r^T (x - t_r)).
Quadric observe(const Quadric& world, const ObserverPose& pose);

/// State read off a world quadric's canonical decomposition, with cone
/// scales in the same convention as QuadricMeasurement.
QuadricState state_from_quadric(const Quadric& world, const Tolerances& tol = {});

struct FactorError {
  Eigen::Matrix<double, 9, 1> e_R = Eigen::Matrix<double, 9, 1>::Zero();
  Vec3 e_t = Vec3::Zero();
  Vec3 e_s = Vec3::Zero();

  /// (e_R, e_t, e_s).
  [[nodiscard]] Eigen::Matrix<double, 15, 1> stacked() const;
};

/// With Delta_R = R_r^T R_q and u_i the unit axes:
///   e_R[3i:3i+3] = IR_i  v_i x (Delta_R u_i)
///   e_t[i]       = It_i (lambda_i u_i^T R_q^T (t_q - t_r) + u_i^T R_q^T R_r l)
///   e_s[i]       = Is_i (s_i^2 - 1/|lambda_i|)
/// All three vanish for a measurement generated from (pose, state).
FactorError error(const QuadricMeasurement& m, const ObserverPose& r, const QuadricState& q);

/// Columns: [dR_r, dt_r, dR_q, dt_q, ds_q], rotations perturbed on the right
/// (R <- R exp([w]x)), translations and scales additively.
using Jacobian = Eigen::Matrix<double, 15, 15>;
Jacobian jacobian(const QuadricMeasurement& m, const ObserverPose& r, const QuadricState& q);

/// Right-multiplied exponential-map update of a pose / state.
ObserverPose retract(const ObserverPose& r, const Eigen::Matrix<double, 6, 1>& d);
QuadricState retract(const QuadricState& q, const Eigen::Matrix<double, 9, 1>& d);

}  // namespace quadrics::factor
