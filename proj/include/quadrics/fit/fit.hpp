#pragma once

#include "quadrics/core/decomposition.hpp"
#include "quadrics/factor/lm.hpp"

#include <json.hpp>

#include <vector>

namespace quadrics::fit {

struct FitOptions {
  /// Simpler types win when their residual is within this factor of the best.
  double parsimony_factor = 1.2;
  /// Weight of the normal-alignment rows relative to the algebraic rows.
  double normal_weight = 1.0;
  bool use_normals = true;
  /// Distance below which a point counts as an inlier.
  double inlier_threshold = 0.02;
  /// Gradient-weighted (Taubin) objective for the unconstrained fit.
  bool taubin = false;
  /// Neighborhood size for normals estimated during initialization.
  int normal_neighbors = 16;
  factor::LMConfig lm;
};

struct FitResult {
  Quadric quadric{Vec10::Unit(0)};
  QuadricType type;
  /// Mean point-to-surface distance over the segment.
  double residual = 0.0;
  double inlier_fraction = 0.0;
  bool converged = true;
};

/// Smallest right singular vector of the N x 10 monomial design matrix,
/// normalized. Coplanar input yields the squared plane. Throws
/// DegenerateInput for N < 10 or a design of rank < 9.
FitResult fit_unconstrained(const Segment& seg, const FitOptions& options = {});

/// Fits the canonical form of `type` (Plane, Sphere, Cylinder or Cone) by LM
/// from several initializations; the returned type always equals `type`.
FitResult fit_constrained(const Segment& seg, const QuadricType& type,
                          const FitOptions& options = {});

/// Fits each candidate and keeps the simplest one whose residual is within
/// the parsimony factor of the best.
FitResult fit_auto(const Segment& seg, const std::vector<QuadricType>& candidates,
                   const FitOptions& options = {});

/// Minimum number of points fit_constrained accepts for each type.
int minimum_points(QuadricKind kind);

/// Mean distance and inlier fraction of `q` over `points`.
std::pair<double, double> score(const Quadric& q, const Points& points, double inlier_threshold);

nlohmann::json to_json(const FitResult& r);
FitResult fit_result_from_json(const nlohmann::json& j, const std::string& where = "fit");

}  // namespace quadrics::fit
