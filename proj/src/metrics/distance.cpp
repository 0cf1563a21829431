#include "quadrics/metrics/distance.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <numbers>

namespace quadrics::metrics {
namespace {

constexpr double kOnSurface = 1e-15;
constexpr double kSingular = 1e-8;

}  // namespace

SurfaceDistance::SurfaceDistance(const Quadric& q, DistanceOptions options)
    : options_(options) {
  Mat4 Q = q.matrix();
  Q /= Q.norm();
  a_ = Q.topLeftCorner<3, 3>();
  l_ = Q.topRightCorner<3, 1>();
  k_ = Q(3, 3);

  Eigen::SelfAdjointEigenSolver<Mat4> solver(Q);
  const Vec4 lam = solver.eigenvalues();
  const double max_abs = lam.cwiseAbs().maxCoeff();
  int nonzero = 0;
  Eigen::Index dominant = 0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    if (std::abs(lam(i)) > 1e-9 * max_abs) ++nonzero;
    if (std::abs(lam(i)) == max_abs) dominant = i;
  }
  if (nonzero == 1) {
    const Vec4 v = solver.eigenvectors().col(dominant);
    const double n = v.head<3>().norm();
    if (n > 0.0) {
      rank_one_ = true;
      plane_ = v / n;
    }
  }
}

double SurfaceDistance::f(const Vec3& p) const { return p.dot(a_ * p) + 2.0 * l_.dot(p) + k_; }

Vec3 SurfaceDistance::grad(const Vec3& p) const { return 2.0 * (a_ * p + l_); }

// Smallest-magnitude real root s of f(x + s d) = 0.
bool SurfaceDistance::line_root(const Vec3& x, const Vec3& d, double& s) const {
  const double qa = d.dot(a_ * d);
  const double qb = 2.0 * d.dot(a_ * x + l_);
  const double qc = f(x);
  const double scale = std::abs(qa) + std::abs(qb) + std::abs(qc);
  if (std::abs(qa) <= 1e-14 * scale) {
    if (std::abs(qb) <= 1e-14 * scale) return false;
    s = -qc / qb;
    return true;
  }
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return false;
  const double root = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double t = -0.5 * (qb + std::copysign(root, qb));
  const double r1 = t / qa;
  const double r2 = t != 0.0 ? qc / t : r1;
  s = std::abs(r1) < std::abs(r2) ? r1 : r2;
  return true;
}

// Nearest line root over a Fibonacci sphere of directions.
bool SurfaceDistance::directional_search(const Vec3& x, Vec3& foot) const {
  double best = std::numeric_limits<double>::infinity();
  const int n = options_.fallback_directions;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 d(r * std::cos(golden * i), r * std::sin(golden * i), z);
    double s = 0.0;
    if (line_root(x, d, s) && std::abs(s) < best) {
      best = std::abs(s);
      foot = x + s * d;
    }
  }
  return std::isfinite(best);
}

// Newton iterations on the Lagrange conditions of min |p - x|^2 s.t. f(p) = 0,
// started from a surface point. The refined foot replaces the start only if it
// lands back on the surface closer to x.
Vec3 SurfaceDistance::refine(const Vec3& x, Vec3 start) const {
  Vec3 g = grad(start);
  double gg = g.squaredNorm();
  if (gg == 0.0 || options_.refine_steps <= 0) return start;
  Vec3 p = start;
  double mu = -(p - x).dot(g) / gg;
  for (int it = 0; it < options_.refine_steps; ++it) {
    g = grad(p);
    Vec4 rhs;
    rhs.head<3>() = -((p - x) + mu * g);
    rhs(3) = -f(p);
    Mat4 J;
    J.topLeftCorner<3, 3>() = Mat3::Identity() + 2.0 * mu * a_;
    J.topRightCorner<3, 1>() = g;
    J.bottomLeftCorner<1, 3>() = g.transpose();
    J(3, 3) = 0.0;
    const Vec4 delta = J.fullPivLu().solve(rhs);
    if (!delta.allFinite()) return start;
    p += delta.head<3>();
    mu += delta(3);
    if (delta.head<3>().norm() < 1e-15) break;
  }
  g = grad(p);
  gg = g.squaredNorm();
  if (gg == 0.0) return start;
  double s = 0.0;
  if (std::abs(f(p)) > kOnSurface) {
    if (!line_root(p, g / std::sqrt(gg), s)) return start;
    p += s * g / std::sqrt(gg);
  }
  return (p - x).norm() <= (start - x).norm() ? p : start;
}

DistanceResult SurfaceDistance::operator()(const Vec3& x) const {
  DistanceResult out;
  if (rank_one_) {
    const double d = plane_.head<3>().dot(x) + plane_(3);
    out.distance = std::abs(d);
    out.foot = x - d * plane_.head<3>();
    return out;
  }
  const double fx = f(x);
  if (std::abs(fx) <= kOnSurface) {
    out.foot = x;
    return out;
  }

  Vec3 g = grad(x);
  Vec3 p = x;
  if (g.norm() > 1e-12) {
    // First-order estimate along the gradient, solved exactly on the line,
    // then Newton steps along the local gradient.
    const Vec3 d = g.normalized();
    double s = 0.0;
    if (line_root(x, d, s)) {
      p = x + s * d;
    } else {
      p = x - (fx / g.squaredNorm()) * g;
    }
    for (int it = 0; it < options_.newton_steps; ++it) {
      const double fp = f(p);
      const Vec3 gp = grad(p);
      if (std::abs(fp) <= kOnSurface || gp.squaredNorm() == 0.0) break;
      p -= (fp / gp.squaredNorm()) * gp;
    }
  } else {
    out.approximate = true;
    if (!directional_search(x, p)) {
      out.distance = std::numeric_limits<double>::infinity();
      out.foot = x;
      return out;
    }
  }
  // A foot on a singular point (cone apex) is a stationary point of the
  // gradient walk but rarely the nearest point; search directions instead.
  if (grad(p).norm() <= kSingular) {
    Vec3 q = x;
    if (directional_search(x, q) && (q - x).norm() < (p - x).norm()) {
      p = q;
      out.approximate = true;
    }
  }
  p = refine(x, p);
  out.foot = p;
  out.distance = (p - x).norm();
  return out;
}

double point_distance(const Quadric& q, const Vec3& x) { return SurfaceDistance(q)(x).distance; }

}  // namespace quadrics::metrics
