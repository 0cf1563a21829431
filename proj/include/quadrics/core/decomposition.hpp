#pragma once

#include "quadrics/core/quadric.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace quadrics {

/// Relative thresholds used by every eigenvalue test. Both are relative to
/// max |lambda| so they survive proportional rescaling of Q.
struct Tolerances {
  double zero = 1e-8;
  double duplicate = 1e-6;
};

enum class QuadricKind { Plane, Sphere, Cylinder, Cone, Line, Ellipsoid, Other };

/// Type label plus the sign/zero signature of diag(C) = (la, lb, lc, c44),
/// each entry in {-1, 0, +1}. Two `Other` types compare equal only when their
/// signatures match.
class QuadricType {
 public:
  using Signature = std::array<int, 4>;

  QuadricType() = default;
  explicit QuadricType(QuadricKind kind);
  QuadricType(QuadricKind kind, Signature signature);

  static QuadricType plane() { return QuadricType(QuadricKind::Plane); }
  static QuadricType sphere() { return QuadricType(QuadricKind::Sphere); }
  static QuadricType cylinder() { return QuadricType(QuadricKind::Cylinder); }
  static QuadricType cone() { return QuadricType(QuadricKind::Cone); }

  [[nodiscard]] QuadricKind kind() const { return kind_; }
  [[nodiscard]] const Signature& signature() const { return signature_; }
  [[nodiscard]] std::string_view name() const;

  /// Parses "plane", "sphere", ... (case-sensitive, lowercase).
  static QuadricType from_name(std::string_view name);

  friend bool operator==(const QuadricType& a, const QuadricType& b);

 private:
  QuadricKind kind_ = QuadricKind::Other;
  Signature signature_{0, 0, 0, 0};
};

/// Canonical signature for a named kind: the sign pattern of its canonical
/// matrix. Throws for `Other`.
QuadricType::Signature canonical_signature(QuadricKind kind);

/// Simplicity order used for tie breaking: Plane < Sphere < Cylinder < Cone.
int parsimony_rank(QuadricKind kind);

/// The four primitive kinds that the fitter and generator handle.
const std::vector<QuadricType>& primitive_types();

struct DegeneracyMasks {
  Mask3 scale{1, 1, 1};
  Mask3 rotation{1, 1, 1};
  Mask3 translation{1, 1, 1};

  friend bool operator==(const DegeneracyMasks&, const DegeneracyMasks&) = default;
};

/// Geometric reading of Q = P^{-T} C P^{-1}, C = diag(lambdas, c44),
/// P = [R t; 0 1]. Eigenvalues are sorted descending and the columns of
/// `rotation` follow the same order. Columns with `masks.rotation[i] == 0`
/// are not identifiable and are arbitrary orthonormal completions.
struct CanonicalDecomposition {
  Vec3 lambdas = Vec3::Zero();
  double c44 = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Vec3 scale = Vec3::Zero();
  DegeneracyMasks masks;
};

/// Q from its canonical form; throws if the rotation is not orthonormal
/// (tolerance 1e-8). `scale` and `masks` are ignored.
Quadric compose(const CanonicalDecomposition& c);
Quadric compose(const Vec3& lambdas, double c44, const Mat3& R, const Vec3& t);

/// Removes the proportional ambiguity of Q. With a finite center and
/// c44 != 0 the scale is |prod lambda(Q33) / prod lambda(Q)| over nonzero
/// eigenvalues (this maps c44 to -1); otherwise Q is divided by its Frobenius
/// norm. The overall sign is fixed so that c44 < 0, or, when c44 = 0, so that
/// positive eigenvalues of Q33 are not outnumbered.
Quadric normalize(const Quadric& q, const Tolerances& tol = {});

/// Normalizes, then diagonalizes Q33 and recovers pose, scale and masks.
CanonicalDecomposition decompose(const Quadric& q, const Tolerances& tol = {});

DegeneracyMasks degeneracy_masks(const Vec3& lambdas, double c44,
                                 const Tolerances& tol = {});

QuadricType classify(const CanonicalDecomposition& c, const Tolerances& tol = {});
QuadricType classify(const CanonicalDecomposition& c, double zero_tol);

/// Sign/zero signature of (la, lb, lc, c44) with the quadric's overall sign
/// folded so that c44 <= 0.
QuadricType::Signature signature_of(const Vec3& lambdas, double c44,
                                    const Tolerances& tol = {});

}  // namespace quadrics
