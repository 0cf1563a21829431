#include "quadrics/losses/losses.hpp"

#include <algorithm>
#include <cmath>

namespace quadrics::losses {
namespace {

void check_pairing(const std::vector<Segment>& segments, const std::vector<Quadric>& quadrics) {
  if (segments.size() != quadrics.size()) {
    throw InvalidArgument("segments and quadrics lists differ in length");
  }
  if (segments.empty()) throw InvalidArgument("empty segment list");
  for (const auto& s : segments) {
    if (s.size() == 0) throw InvalidArgument("empty segment");
  }
}

void require_normals(const std::vector<Segment>& segments) {
  for (const auto& s : segments) {
    if (!s.has_normals()) throw InvalidArgument("normal loss requires segment normals");
  }
}

// grad f(x) = G(x) q for the coefficient vector q.
Eigen::Matrix<double, 3, 10> gradient_design(const Vec3& x) {
  Eigen::Matrix<double, 3, 10> G = Eigen::Matrix<double, 3, 10>::Zero();
  G(0, 0) = 2 * x(0);
  G(1, 1) = 2 * x(1);
  G(2, 2) = 2 * x(2);
  G(0, 3) = 2 * x(1), G(1, 3) = 2 * x(0);
  G(0, 4) = 2 * x(2), G(2, 4) = 2 * x(0);
  G(1, 5) = 2 * x(2), G(2, 5) = 2 * x(1);
  G(0, 6) = 2, G(1, 7) = 2, G(2, 8) = 2;
  return G;
}

}  // namespace

double triplet_loss(const std::vector<TripletSet>& sets) {
  if (sets.empty()) throw InvalidArgument("triplet loss needs at least one set");
  double sum = 0.0;
  for (const auto& s : sets) {
    if (s.anchor.size() != s.positive.size() || s.anchor.size() != s.negative.size()) {
      throw InvalidArgument("triplet feature dimensions differ");
    }
    if (!(s.margin > 0.0)) throw InvalidArgument("triplet margin must be positive");
    const double v = (s.anchor - s.positive).squaredNorm() -
                     (s.anchor - s.negative).squaredNorm() + s.margin;
    sum += std::max(v, 0.0);
  }
  return sum / static_cast<double>(sets.size());
}

double type_loss(const MembershipPair& pair) {
  if (pair.predicted.rows() != pair.truth.rows() || pair.predicted.cols() != pair.truth.cols()) {
    throw InvalidArgument("type memberships differ in shape");
  }
  if (pair.predicted.rows() == 0) throw InvalidArgument("empty type membership");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pair.truth.rows(); ++i) {
    for (Eigen::Index j = 0; j < pair.truth.cols(); ++j) {
      if (pair.truth(i, j) != 0.0) {
        sum -= pair.truth(i, j) * std::log(std::max(pair.predicted(i, j), kLogFloor));
      }
    }
  }
  return sum / static_cast<double>(pair.truth.rows());
}

double primal_loss(const std::vector<Segment>& segments, const std::vector<Quadric>& quadrics) {
  check_pairing(segments, quadrics);
  double total = 0.0;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& pts = segments[k].points;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const double e = quadrics[k].evaluate(pts.row(i).transpose());
      sum += e * e;
    }
    total += sum / static_cast<double>(pts.rows());
  }
  return total / static_cast<double>(segments.size());
}

Eigen::MatrixXd primal_loss_gradient(const std::vector<Segment>& segments,
                                     const std::vector<Quadric>& quadrics) {
  check_pairing(segments, quadrics);
  const double K = static_cast<double>(segments.size());
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(segments.size()), 10);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& pts = segments[k].points;
    const double w = 1.0 / (K * static_cast<double>(pts.rows()));
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const Vec10 m = Quadric::monomials(pts.row(i).transpose());
      const double e = quadrics[k].coeffs().dot(m);
      grad.row(static_cast<Eigen::Index>(k)) += (2.0 * w * e) * m.transpose();
    }
  }
  return grad;
}

double normal_loss(const std::vector<Segment>& segments, const std::vector<Quadric>& quadrics) {
  check_pairing(segments, quadrics);
  require_normals(segments);
  double total = 0.0;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& pts = segments[k].points;
    const auto& nrm = *segments[k].normals;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const Vec3 g = quadrics[k].gradient(pts.row(i).transpose());
      sum += g.cross(Vec3(nrm.row(i).transpose())).squaredNorm();
    }
    total += sum / static_cast<double>(pts.rows());
  }
  return total / static_cast<double>(segments.size());
}

Eigen::MatrixXd normal_loss_gradient(const std::vector<Segment>& segments,
                                     const std::vector<Quadric>& quadrics) {
  check_pairing(segments, quadrics);
  require_normals(segments);
  const double K = static_cast<double>(segments.size());
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(segments.size()), 10);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& pts = segments[k].points;
    const auto& nrm = *segments[k].normals;
    const double w = 1.0 / (K * static_cast<double>(pts.rows()));
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const Vec3 x = pts.row(i).transpose();
      const Vec3 n = nrm.row(i).transpose();
      const auto G = gradient_design(x);
      const Vec3 c = (G * quadrics[k].coeffs()).cross(n);
      // c = g x n = -[n]x g, so dc/dq = -[n]x G.
      Mat3 nx;
      nx << 0, -n(2), n(1), n(2), 0, -n(0), -n(1), n(0), 0;
      const Eigen::Matrix<double, 3, 10> dc = -nx * G;
      grad.row(static_cast<Eigen::Index>(k)) += (2.0 * w) * (dc.transpose() * c).transpose();
    }
  }
  return grad;
}

double regression_loss(const std::vector<Quadric>& predicted, const std::vector<Quadric>& truth) {
  if (predicted.size() != truth.size()) throw InvalidArgument("regression lists differ in length");
  if (predicted.empty()) throw InvalidArgument("empty regression list");
  double sum = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    sum += (predicted[k].matrix() - truth[k].matrix()).squaredNorm();
  }
  return sum / static_cast<double>(predicted.size());
}

GeometricTruth GeometricTruth::from_quadric(const Quadric& q, const Tolerances& tol) {
  GeometricTruth g;
  g.decomposition = decompose(q, tol);
  g.linear = normalize(q, tol).linear();
  return g;
}

GeometricTerms geometric_terms(const CanonicalDecomposition& predicted,
                               const GeometricTruth& truth) {
  const auto& t = truth.decomposition;
  if (!(predicted.masks == t.masks)) {
    throw InvalidArgument("geometric loss pair has mismatched degeneracy masks");
  }
  GeometricTerms out;
  const Vec3 trans = t.lambdas.asDiagonal() * (t.rotation.transpose() * predicted.translation) +
                     t.rotation.transpose() * truth.linear;
  for (int i = 0; i < 3; ++i) {
    const double ds = t.masks.scale[i] * (predicted.lambdas(i) - t.lambdas(i));
    const Vec3 cr = t.masks.rotation[i] *
                    Vec3(predicted.rotation.col(i)).cross(Vec3(t.rotation.col(i)));
    const double dt = t.masks.translation[i] * trans(i);
    out.scale += ds * ds;
    out.rotation += cr.squaredNorm();
    out.translation += dt * dt;
  }
  return out;
}

double geometric_loss(const std::vector<CanonicalDecomposition>& predicted,
                      const std::vector<GeometricTruth>& truth) {
  if (predicted.size() != truth.size()) throw InvalidArgument("geometric lists differ in length");
  if (predicted.empty()) throw InvalidArgument("empty geometric list");
  double sum = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    sum += geometric_terms(predicted[k], truth[k]).total();
  }
  return sum / static_cast<double>(predicted.size());
}

double geometric_loss(const std::vector<CanonicalDecomposition>& predicted,
                      const std::vector<CanonicalDecomposition>& truth) {
  std::vector<GeometricTruth> gt;
  gt.reserve(truth.size());
  for (const auto& t : truth) {
    const Quadric q = compose(t);
    gt.push_back({t, q.linear()});
  }
  return geometric_loss(predicted, gt);
}

}  // namespace quadrics::losses
