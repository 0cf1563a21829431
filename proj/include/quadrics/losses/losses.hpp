#pragma once

#include "quadrics/core/decomposition.hpp"

#include <vector>

namespace quadrics::losses {

struct TripletSet {
  Eigen::VectorXd anchor;
  Eigen::VectorXd positive;
  Eigen::VectorXd negative;
  double margin = 1.0;
};

/// Mean hinge max(|a - p|^2 - |a - n|^2 + margin, 0) over the sets.
double triplet_loss(const std::vector<TripletSet>& sets);

struct MembershipPair {
  Eigen::MatrixXd predicted;  // N x L, rows sum to 1
  Eigen::MatrixXd truth;      // N x L, one-hot rows
};

inline constexpr double kLogFloor = 1e-12;

/// Mean row cross entropy -sum_j L_ij log(max(Lhat_ij, 1e-12)).
double type_loss(const MembershipPair& pair);

/// Mean over segments of mean_x (x^T Q x)^2. Pairing of points and quadrics
/// is the caller's: predicted points with GT quadrics for training-style use,
/// GT points with predicted quadrics for evaluation.
double primal_loss(const std::vector<Segment>& segments, const std::vector<Quadric>& quadrics);

/// Mean over segments of mean_x |(grad Q x) x n|^2; requires normals.
double normal_loss(const std::vector<Segment>& segments, const std::vector<Quadric>& quadrics);

/// Gradients with respect to each quadric's 10 coefficients (K x 10).
Eigen::MatrixXd primal_loss_gradient(const std::vector<Segment>& segments,
                                     const std::vector<Quadric>& quadrics);
Eigen::MatrixXd normal_loss_gradient(const std::vector<Segment>& segments,
                                     const std::vector<Quadric>& quadrics);

/// Mean squared Frobenius distance between 4x4 matrices. Inputs are expected
/// to be normalized already; this evaluator does not normalize.
double regression_loss(const std::vector<Quadric>& predicted, const std::vector<Quadric>& truth);

/// Truth side of the geometric loss: decomposition plus the linear block l of
/// the (normalized) GT quadric, which the translation term needs.
struct GeometricTruth {
  CanonicalDecomposition decomposition;
  Vec3 linear = Vec3::Zero();

  static GeometricTruth from_quadric(const Quadric& q, const Tolerances& tol = {});
};

struct GeometricTerms {
  double scale = 0.0;
  double rotation = 0.0;
  double translation = 0.0;
  [[nodiscard]] double total() const { return scale + rotation + translation; }
};

/// Per-pair terms with masks applied before squaring:
///   scale       sum_i Is_i (lhat_i - l_i)^2
///   rotation    sum_i IR_i |rhat_i x r_i|^2
///   translation sum_i It_i ((Lambda R^T that + R^T l)_i)^2
GeometricTerms geometric_terms(const CanonicalDecomposition& predicted,
                               const GeometricTruth& truth);

/// Mean of geometric_terms(...).total(); throws when a pair's masks differ.
double geometric_loss(const std::vector<CanonicalDecomposition>& predicted,
                      const std::vector<GeometricTruth>& truth);
double geometric_loss(const std::vector<CanonicalDecomposition>& predicted,
                      const std::vector<CanonicalDecomposition>& truth);

struct FittingWeights {
  double primal = 1.0;
  double normal = 1.0;
  double regression = 1.0;
  double geometric = 1.0;
};

}  // namespace quadrics::losses
