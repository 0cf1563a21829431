#include "quadrics/fit/fit.hpp"

#include "quadrics/core/serialize.hpp"
#include "quadrics/metrics/distance.hpp"

#include <cmath>

namespace quadrics::fit {
namespace {

Eigen::Matrix<double, Eigen::Dynamic, 10> design_matrix(const Points& pts) {
  Eigen::Matrix<double, Eigen::Dynamic, 10> M(pts.rows(), 10);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    M.row(i) = Quadric::monomials(pts.row(i).transpose()).transpose();
  }
  return M;
}

// Returns the unit plane normal when the points are coplanar (to a relative
// tolerance), together with the centroid.
bool coplanar(const Points& pts, Vec3& normal, Vec3& centroid) {
  centroid = pts.colwise().mean().transpose();
  const Points c = pts.rowwise() - centroid.transpose();
  const Mat3 cov = c.transpose() * c / static_cast<double>(pts.rows());
  const Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  normal = es.eigenvectors().col(0);
  return es.eigenvalues()(0) <= 1e-20 * std::max(es.eigenvalues()(2), 1e-300) ||
         es.eigenvalues()(2) == 0.0;
}

Vec10 taubin_fit(const Eigen::Matrix<double, Eigen::Dynamic, 10>& M, const Points& pts) {
  // Constraint matrix sum_i G_i^T G_i of the gradient design; the constant
  // coefficient is eliminated in closed form before the generalized solve.
  Eigen::Matrix<double, 10, 10> S = M.transpose() * M;
  Eigen::Matrix<double, 9, 9> N = Eigen::Matrix<double, 9, 9>::Zero();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vec3 x = pts.row(i).transpose();
    Eigen::Matrix<double, 3, 9> G = Eigen::Matrix<double, 3, 9>::Zero();
    G(0, 0) = 2 * x(0), G(1, 1) = 2 * x(1), G(2, 2) = 2 * x(2);
    G(0, 3) = 2 * x(1), G(1, 3) = 2 * x(0);
    G(0, 4) = 2 * x(2), G(2, 4) = 2 * x(0);
    G(1, 5) = 2 * x(2), G(2, 5) = 2 * x(1);
    G(0, 6) = 2, G(1, 7) = 2, G(2, 8) = 2;
    N += G.transpose() * G;
  }
  const double sjj = S(9, 9);
  const Eigen::Matrix<double, 9, 1> sj = S.block<9, 1>(0, 9);
  const Eigen::Matrix<double, 9, 9> R = S.topLeftCorner<9, 9>() - sj * sj.transpose() / sjj;
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> es(R, N);
  if (es.info() != Eigen::Success) throw DegenerateInput("Taubin fit failed");
  Vec10 q;
  q.head<9>() = es.eigenvectors().col(0);
  q(9) = -sj.dot(q.head<9>()) / sjj;
  return q.normalized();
}

}  // namespace

int minimum_points(QuadricKind kind) {
  switch (kind) {
    case QuadricKind::Plane:
      return 3;
    case QuadricKind::Sphere:
      return 4;
    case QuadricKind::Cylinder:
    case QuadricKind::Cone:
      return 6;
    default:
      throw InvalidArgument("constrained fitting supports plane, sphere, cylinder and cone");
  }
}

std::pair<double, double> score(const Quadric& q, const Points& points, double inlier_threshold) {
  const metrics::SurfaceDistance dist(q);
  double sum = 0.0;
  Eigen::Index inliers = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double d = dist.distance(points.row(i).transpose());
    sum += d;
    if (d < inlier_threshold) ++inliers;
  }
  const auto n = static_cast<double>(std::max<Eigen::Index>(points.rows(), 1));
  return {sum / n, static_cast<double>(inliers) / n};
}

FitResult fit_unconstrained(const Segment& seg, const FitOptions& options) {
  const Points& pts = seg.points;
  if (pts.rows() < 10) throw DegenerateInput("unconstrained fit needs at least 10 points");
  if (!pts.allFinite()) throw InvalidArgument("segment has non-finite points");

  Vec10 q;
  Vec3 normal, centroid;
  if (coplanar(pts, normal, centroid)) {
    q = compose(Vec3(1, 0, 0), 0.0,
                (Mat3() << normal, normal.unitOrthogonal(), normal.cross(normal.unitOrthogonal()))
                    .finished(),
                normal.dot(centroid) * normal)
            .coeffs();
  } else {
    const auto M = design_matrix(pts);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-10 * sv(0) ? 1 : 0;
    if (rank < 9) throw DegenerateInput("design matrix has rank < 9");
    q = options.taubin ? taubin_fit(M, pts) : Vec10(svd.matrixV().col(9));
  }
  FitResult r;
  r.quadric = normalize(Quadric(q));
  r.type = classify(decompose(r.quadric));
  std::tie(r.residual, r.inlier_fraction) = score(r.quadric, pts, options.inlier_threshold);
  return r;
}

nlohmann::json to_json(const FitResult& r) {
  nlohmann::json j = quadrics::to_json(r.quadric);
  j["type"] = std::string(r.type.name());
  j["residual"] = r.residual;
  j["inlier_fraction"] = r.inlier_fraction;
  j["converged"] = r.converged;
  return j;
}

FitResult fit_result_from_json(const nlohmann::json& j, const std::string& where) {
  FitResult r;
  r.quadric = quadric_from_json(j, where);
  const auto& type = require(j, "type", where);
  if (!type.is_string()) throw SchemaError(where + ".type: expected a string");
  r.type = QuadricType::from_name(type.get<std::string>());
  const auto number = [&](const char* key) {
    const auto& v = require(j, key, where);
    if (!v.is_number()) throw SchemaError(where + "." + key + ": expected a number");
    return v.get<double>();
  };
  r.residual = number("residual");
  r.inlier_fraction = number("inlier_fraction");
  const auto& c = require(j, "converged", where);
  if (!c.is_boolean()) throw SchemaError(where + ".converged: expected a boolean");
  r.converged = c.get<bool>();
  return r;
}

}  // namespace quadrics::fit
