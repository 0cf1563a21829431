#include "quadrics/core/decomposition.hpp"

#include "quadrics/core/rotation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace quadrics {
namespace {

int sign_with_tol(double v, double threshold) {
  if (std::abs(v) <= threshold) return 0;
  return v > 0.0 ? 1 : -1;
}

struct Spectrum {
  Eigen::VectorXd values;
  double max_abs = 0.0;
  int rank = 0;
  double nonzero_product = 1.0;
};

template <class Matrix>
Spectrum spectrum_of(const Matrix& m, double zero_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  Spectrum s;
  s.values = solver.eigenvalues();
  s.max_abs = s.values.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < s.values.size(); ++i) {
    if (std::abs(s.values(i)) > zero_tol * s.max_abs) {
      ++s.rank;
      s.nonzero_product *= s.values(i);
    }
  }
  return s;
}

// Minimum-norm solution of Q33 t + l = 0 through the thresholded pseudoinverse.
struct Center {
  Vec3 t = Vec3::Zero();
  bool exists = false;
};

Center solve_center(const Mat3& q33, const Vec3& l, double zero_tol) {
  Eigen::SelfAdjointEigenSolver<Mat3> solver(q33);
  const Vec3 lam = solver.eigenvalues();
  const Mat3 V = solver.eigenvectors();
  const double max_abs = lam.cwiseAbs().maxCoeff();
  Center c;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(lam(i)) > zero_tol * max_abs) {
      c.t -= (V.col(i).dot(l) / lam(i)) * V.col(i);
    }
  }
  const double residual = (q33 * c.t + l).norm();
  c.exists = residual <= zero_tol * (l.norm() + max_abs);
  return c;
}

}  // namespace

QuadricType::QuadricType(QuadricKind kind) : kind_(kind) {
  if (kind != QuadricKind::Other) signature_ = canonical_signature(kind);
}

QuadricType::QuadricType(QuadricKind kind, Signature signature)
    : kind_(kind), signature_(signature) {}

std::string_view QuadricType::name() const {
  switch (kind_) {
    case QuadricKind::Plane: return "plane";
    case QuadricKind::Sphere: return "sphere";
    case QuadricKind::Cylinder: return "cylinder";
    case QuadricKind::Cone: return "cone";
    case QuadricKind::Line: return "line";
    case QuadricKind::Ellipsoid: return "ellipsoid";
    case QuadricKind::Other: return "other";
  }
  return "other";
}

QuadricType QuadricType::from_name(std::string_view name) {
  for (auto kind : {QuadricKind::Plane, QuadricKind::Sphere, QuadricKind::Cylinder,
                    QuadricKind::Cone, QuadricKind::Line, QuadricKind::Ellipsoid}) {
    if (QuadricType(kind).name() == name) return QuadricType(kind);
  }
  if (name == "other") return QuadricType(QuadricKind::Other);
  throw InvalidArgument("unknown quadric type '" + std::string(name) + "'");
}

bool operator==(const QuadricType& a, const QuadricType& b) {
  if (a.kind_ != b.kind_) return false;
  return a.kind_ != QuadricKind::Other || a.signature_ == b.signature_;
}

QuadricType::Signature canonical_signature(QuadricKind kind) {
  switch (kind) {
    case QuadricKind::Plane: return {1, 0, 0, 0};
    case QuadricKind::Sphere: return {1, 1, 1, -1};
    case QuadricKind::Cylinder: return {1, 1, 0, -1};
    case QuadricKind::Cone: return {1, 1, -1, 0};
    case QuadricKind::Line: return {1, 1, 0, 0};
    case QuadricKind::Ellipsoid: return {1, 1, 1, -1};
    case QuadricKind::Other: break;
  }
  throw InvalidArgument("'other' has no canonical signature");
}

int parsimony_rank(QuadricKind kind) {
  switch (kind) {
    case QuadricKind::Plane: return 0;
    case QuadricKind::Sphere: return 1;
    case QuadricKind::Cylinder: return 2;
    case QuadricKind::Cone: return 3;
    default: return 4;
  }
}

const std::vector<QuadricType>& primitive_types() {
  static const std::vector<QuadricType> types{QuadricType::plane(), QuadricType::sphere(),
                                              QuadricType::cylinder(), QuadricType::cone()};
  return types;
}

Quadric compose(const Vec3& lambdas, double c44, const Mat3& R, const Vec3& t) {
  if (!is_rotation(R, 1e-8)) {
    throw InvalidArgument("compose: rotation is not orthonormal with det +1");
  }
  const Mat3 q33 = R * lambdas.asDiagonal() * R.transpose();
  const Vec3 l = -q33 * t;
  const double k = t.dot(q33 * t) + c44;
  return Quadric::from_blocks(q33, l, k);
}

Quadric compose(const CanonicalDecomposition& c) {
  return compose(c.lambdas, c.c44, c.rotation, c.translation);
}

Quadric normalize(const Quadric& q, const Tolerances& tol) {
  const Mat4 Q = q.matrix();
  const Mat3 q33 = Q.topLeftCorner<3, 3>();
  const Vec3 l = Q.topRightCorner<3, 1>();

  const Spectrum s3 = spectrum_of(q33, tol.zero);
  const Spectrum s4 = spectrum_of(Q, tol.zero);
  const Center center = solve_center(q33, l, tol.zero);
  const double c44 = Q(3, 3) + l.dot(center.t);
  const bool c44_nonzero = std::abs(c44) > tol.zero * s3.max_abs;

  // Eigenvalue-ratio branch only when rank(Q) = rank(Q33) + 1; otherwise the
  // ratio is not homogeneous of degree -1 in Q and the result would not be a
  // fixpoint (paraboloids, 0/0 patterns).
  const bool ratio_branch = center.exists && c44_nonzero && s4.rank == s3.rank + 1;
  double alpha = ratio_branch ? std::abs(s3.nonzero_product / s4.nonzero_product)
                              : 1.0 / Q.norm();

  if (ratio_branch) {
    if (c44 > 0.0) alpha = -alpha;
  } else {
    int pos = 0, neg = 0;
    double extreme = 0.0;
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double v = s3.values(i);
      if (std::abs(v) <= tol.zero * s3.max_abs) continue;
      (v > 0 ? pos : neg) += 1;
      if (std::abs(v) > std::abs(extreme)) extreme = v;
    }
    bool flip = neg > pos;
    if (pos == neg) {
      const double lo = s3.values.minCoeff();
      const double hi = s3.values.maxCoeff();
      if (std::abs(hi + lo) > tol.duplicate * s3.max_abs) {
        flip = extreme < 0.0;
      } else {
        for (Eigen::Index i = 0; i < 10; ++i) {
          if (q.coeffs()(i) != 0.0) {
            flip = q.coeffs()(i) < 0.0;
            break;
          }
        }
      }
    }
    if (flip) alpha = -alpha;
  }
  return q.scaled(alpha);
}

DegeneracyMasks degeneracy_masks(const Vec3& lambdas, double c44, const Tolerances& tol) {
  const double max_abs = lambdas.cwiseAbs().maxCoeff();
  std::array<bool, 3> zero{};
  for (int i = 0; i < 3; ++i) zero[i] = std::abs(lambdas(i)) <= tol.zero * max_abs;

  DegeneracyMasks m;
  for (int i = 0; i < 3; ++i) {
    bool duplicated = false;
    for (int j = 0; j < 3; ++j) {
      if (j != i && std::abs(lambdas(i) - lambdas(j)) <= tol.duplicate * max_abs) {
        duplicated = true;
      }
    }
    m.rotation[i] = duplicated ? 0 : 1;
    m.translation[i] = zero[i] ? 0 : 1;
  }

  const bool c44_nonzero = std::abs(c44) > tol.zero * max_abs;
  if (c44_nonzero) {
    for (int i = 0; i < 3; ++i) m.scale[i] = zero[i] ? 0 : 1;
  } else {
    // A homogeneous form only fixes ratios; extent is defined along the
    // majority-sign axes and only when an opposite-sign axis exists (cones).
    int pos = 0, neg = 0;
    for (int i = 0; i < 3; ++i) {
      if (!zero[i]) (lambdas(i) > 0 ? pos : neg) += 1;
    }
    const int majority = pos >= neg ? 1 : -1;
    const bool mixed = pos > 0 && neg > 0;
    if (!mixed) {
      // The zero set is the span of the zero axes (plane, line or point);
      // only an axis that alone spans it or its complement is identifiable.
      const int nonzero = pos + neg;
      for (int i = 0; i < 3; ++i) {
        m.rotation[i] = (nonzero == 1 && !zero[i]) || (nonzero == 2 && zero[i]) ? 1 : 0;
      }
    }
    for (int i = 0; i < 3; ++i) {
      const int s = zero[i] ? 0 : (lambdas(i) > 0 ? 1 : -1);
      m.scale[i] = (mixed && s == majority) ? 1 : 0;
    }
  }
  return m;
}

CanonicalDecomposition decompose(const Quadric& q, const Tolerances& tol) {
  const Quadric qn = normalize(q, tol);
  const Mat3 q33 = qn.q33();
  const Vec3 l = qn.linear();

  Eigen::SelfAdjointEigenSolver<Mat3> solver(q33);
  const Vec3 ascending = solver.eigenvalues();
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return ascending(a) > ascending(b); });

  CanonicalDecomposition c;
  Mat3 R;
  for (int i = 0; i < 3; ++i) {
    c.lambdas(i) = ascending(order[i]);
    R.col(i) = solver.eigenvectors().col(order[i]);
  }

  const double max_abs = c.lambdas.cwiseAbs().maxCoeff();
  Vec3 center = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(c.lambdas(i)) > tol.zero * max_abs) {
      center -= (R.col(i).dot(l) / c.lambdas(i)) * R.col(i);
    }
  }
  c.c44 = qn.evaluate(center);
  c.masks = degeneracy_masks(c.lambdas, c.c44, tol);

  for (int i = 0; i < 3; ++i) {
    if (c.masks.rotation[i] == 0) continue;
    for (int r = 0; r < 3; ++r) {
      if (std::abs(R(r, i)) > 1e-12) {
        if (R(r, i) < 0.0) R.col(i) = -R.col(i);
        break;
      }
    }
  }
  if (R.determinant() < 0.0) {
    int flip = 2;
    for (int i = 2; i >= 0; --i) {
      if (c.masks.rotation[i] == 0) {
        flip = i;
        break;
      }
    }
    R.col(flip) = -R.col(flip);
  }
  c.rotation = R;

  for (int i = 0; i < 3; ++i) {
    if (c.masks.translation[i]) c.translation += R.col(i).dot(center) * R.col(i);
    c.scale(i) = c.masks.scale[i] ? std::sqrt(std::abs(1.0 / c.lambdas(i))) : 0.0;
  }
  return c;
}

QuadricType::Signature signature_of(const Vec3& lambdas, double c44, const Tolerances& tol) {
  const double max_abs = lambdas.cwiseAbs().maxCoeff();
  const double threshold = tol.zero * max_abs;
  std::array<int, 3> s{};
  for (int i = 0; i < 3; ++i) s[i] = sign_with_tol(lambdas(i), threshold);
  int s44 = sign_with_tol(c44, threshold);

  const int pos = static_cast<int>(std::count(s.begin(), s.end(), 1));
  const int neg = static_cast<int>(std::count(s.begin(), s.end(), -1));
  if (s44 > 0 || (s44 == 0 && neg > pos)) {
    for (auto& v : s) v = -v;
    s44 = -s44;
  }
  std::sort(s.begin(), s.end(), std::greater<>());
  return {s[0], s[1], s[2], s44};
}

QuadricType classify(const CanonicalDecomposition& c, const Tolerances& tol) {
  const auto sig = signature_of(c.lambdas, c.c44, tol);
  using K = QuadricKind;
  const auto is = [&](QuadricType::Signature p) { return sig == p; };

  if (is({1, 1, 1, -1})) {
    const double max_abs = c.lambdas.cwiseAbs().maxCoeff();
    const double spread = c.lambdas.maxCoeff() - c.lambdas.minCoeff();
    return QuadricType(spread <= tol.duplicate * max_abs ? K::Sphere : K::Ellipsoid);
  }
  if (is({1, 1, 0, -1})) return QuadricType(K::Cylinder);
  if (is({1, 0, 0, 0})) return QuadricType(K::Plane);
  if (is({1, 1, 0, 0})) return QuadricType(K::Line);
  if (is({1, 1, -1, 0})) return QuadricType(K::Cone);
  return QuadricType(K::Other, sig);
}

QuadricType classify(const CanonicalDecomposition& c, double zero_tol) {
  Tolerances tol;
  tol.zero = zero_tol;
  return classify(c, tol);
}

}  // namespace quadrics
