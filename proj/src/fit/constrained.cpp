#include "quadrics/core/normals.hpp"
#include "quadrics/core/rotation.hpp"
#include "quadrics/fit/fit.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace quadrics::fit {
namespace {

using RowP = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using GradP = Eigen::Matrix<double, 3, Eigen::Dynamic>;

// Parameters of one constrained model. Rotation is a manifold element; the
// remaining values live in `v`. Every f is a signed Euclidean distance:
//   plane     v = [d]           f = n.x - d,                n = R e0
//   sphere    v = [t, log r]    f = |x - t| - r
//   cylinder  v = [t, log r]    f = rho - r,                 y = R^T (x - t)
//   cone      v = [t, alpha]    f = rho cos(alpha) - y2 sin(alpha)
// with rho = |(y0, y1)|. The cone is the single nappe opening along +R e2.
struct ModelState {
  Mat3 R = Mat3::Identity();
  Eigen::VectorXd v;
};

constexpr double kMinRadius = 1e-12;
constexpr int kScreenIterations = 8;

class Model {
 public:
  explicit Model(QuadricKind kind) : kind_(kind) {}

  [[nodiscard]] int dim() const {
    switch (kind_) {
      case QuadricKind::Plane:
        return 4;
      case QuadricKind::Sphere:
        return 4;
      default:
        return 7;
    }
  }

  // f, its unit world gradient g, and their derivatives with respect to the
  // parameter increment (rotation first when present).
  void eval(const ModelState& s, const Vec3& x, double& f, Vec3& g, RowP* df, GradP* dg) const {
    switch (kind_) {
      case QuadricKind::Plane: {
        const Vec3 n = s.R.col(0);
        f = n.dot(x) - s.v(0);
        g = n;
        if (df) {
          const Mat3 dn = -s.R * skew(Vec3::UnitX());
          df->resize(1, 4);
          dg->resize(3, 4);
          df->leftCols<3>() = x.transpose() * dn;
          (*df)(3) = -1.0;
          dg->leftCols<3>() = dn;
          dg->col(3).setZero();
        }
        return;
      }
      case QuadricKind::Sphere: {
        const double r = std::exp(s.v(3));
        const Vec3 y = x - s.v.head<3>();
        const double rho = std::max(y.norm(), kMinRadius);
        const Vec3 u = y / rho;
        f = rho - r;
        g = u;
        if (df) {
          df->resize(1, 4);
          dg->resize(3, 4);
          df->leftCols<3>() = -u.transpose();
          (*df)(3) = -r;
          dg->leftCols<3>() = -(Mat3::Identity() - u * u.transpose()) / rho;
          dg->col(3).setZero();
        }
        return;
      }
      default: {
        const bool cone = kind_ == QuadricKind::Cone;
        const Vec3 y = s.R.transpose() * (x - s.v.head<3>());
        const double rho = std::max(std::hypot(y(0), y(1)), kMinRadius);
        const Vec3 u(y(0) / rho, y(1) / rho, 0.0);
        // d u / d y
        const Mat3 M = (Vec3(1, 1, 0).asDiagonal().toDenseMatrix() - u * u.transpose()) / rho;
        Vec3 k;  // gradient in the local frame
        Mat3 dk;
        Vec3 dk_param;
        double df_param;
        if (cone) {
          const double c = std::cos(s.v(3));
          const double sn = std::sin(s.v(3));
          f = c * rho - sn * y(2);
          k = c * u - sn * Vec3::UnitZ();
          dk = c * M;
          df_param = -sn * rho - c * y(2);
          dk_param = -sn * u - c * Vec3::UnitZ();
        } else {
          const double r = std::exp(s.v(3));
          f = rho - r;
          k = u;
          dk = M;
          df_param = -r;
          dk_param.setZero();
        }
        g = s.R * k;
        if (df) {
          df->resize(1, 7);
          dg->resize(3, 7);
          df->leftCols<3>() = k.transpose() * skew(y);
          df->middleCols<3>(3) = -k.transpose() * s.R.transpose();
          (*df)(6) = df_param;
          dg->leftCols<3>() = s.R * (dk * skew(y) - skew(k));
          dg->middleCols<3>(3) = -s.R * dk * s.R.transpose();
          dg->col(6) = s.R * dk_param;
        }
        return;
      }
    }
  }

  // Unsigned distance to the primitive itself; for the cone this is the
  // distance to the nearer generator half-line in the point's axial plane.
  [[nodiscard]] double distance(const ModelState& s, const Vec3& x) const {
    if (kind_ != QuadricKind::Cone) {
      double f;
      Vec3 g;
      eval(s, x, f, g, nullptr, nullptr);
      return std::abs(f);
    }
    const Vec3 y = s.R.transpose() * (x - s.v.head<3>());
    const double rho = std::hypot(y(0), y(1));
    const double c = std::cos(s.v(3));
    const double sn = std::sin(s.v(3));
    const double r = y.norm();
    const double near = sn * rho + c * y(2) >= 0.0 ? std::abs(c * rho - sn * y(2)) : r;
    const double far = -sn * rho + c * y(2) >= 0.0 ? std::abs(c * rho + sn * y(2)) : r;
    return std::min(near, far);
  }

  [[nodiscard]] ModelState retract(const ModelState& s, const Eigen::VectorXd& dx) const {
    ModelState out = s;
    if (kind_ == QuadricKind::Plane) {
      out.R = s.R * exp_so3(dx.head<3>());
      out.v(0) += dx(3);
    } else if (kind_ == QuadricKind::Sphere) {
      out.v += dx;
    } else {
      out.R = s.R * exp_so3(dx.head<3>());
      out.v += dx.tail<4>();
    }
    return out;
  }

  [[nodiscard]] Quadric compose_quadric(const ModelState& s) const {
    switch (kind_) {
      case QuadricKind::Plane:
        return compose(Vec3(1, 0, 0), 0.0, s.R, s.v(0) * Vec3(s.R.col(0)));
      case QuadricKind::Sphere: {
        const double lam = std::exp(-2.0 * s.v(3));
        return compose(Vec3::Constant(lam), -1.0, Mat3::Identity(), s.v.head<3>());
      }
      case QuadricKind::Cylinder: {
        const double lam = std::exp(-2.0 * s.v(3));
        return compose(Vec3(lam, lam, 0.0), -1.0, s.R, s.v.head<3>());
      }
      default: {
        const double cot = std::cos(s.v(3)) / std::sin(s.v(3));
        return compose(Vec3(cot * cot, cot * cot, -1.0), 0.0, s.R, s.v.head<3>());
      }
    }
  }

 private:
  QuadricKind kind_;
};

struct FitProblem {
  using State = ModelState;
  using Hessian = Eigen::MatrixXd;

  const Model& model;
  const Points& points;
  const Points* normals;
  const Eigen::VectorXd* weights;
  double normal_weight;

  [[nodiscard]] double row_weight(Eigen::Index i) const {
    return weights ? std::sqrt(std::max((*weights)(i), 0.0)) : 1.0;
  }

  double cost(const State& s) const {
    double c = 0.0;
    double f;
    Vec3 g;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      model.eval(s, points.row(i).transpose(), f, g, nullptr, nullptr);
      const double w = row_weight(i);
      c += w * w * f * f;
      if (normals) {
        c += w * w * normal_weight * normal_weight *
             g.cross(Vec3(normals->row(i).transpose())).squaredNorm();
      }
    }
    return 0.5 * c;
  }

  double linearize(const State& s, Hessian& H, Eigen::VectorXd& grad) const {
    const int p = model.dim();
    H = Eigen::MatrixXd::Zero(p, p);
    grad = Eigen::VectorXd::Zero(p);
    double c = 0.0;
    double f;
    Vec3 g;
    RowP df;
    GradP dg;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      model.eval(s, points.row(i).transpose(), f, g, &df, &dg);
      const double w = row_weight(i);
      const RowP jf = w * df;
      H.noalias() += jf.transpose() * jf;
      grad.noalias() += (w * f) * jf.transpose();
      c += w * w * f * f;
      if (normals) {
        const Vec3 n = normals->row(i).transpose();
        const double b = w * normal_weight;
        const Vec3 e = b * g.cross(n);
        const GradP je = -b * skew(n) * dg;
        H.noalias() += je.transpose() * je;
        grad.noalias() += je.transpose() * e;
        c += e.squaredNorm();
      }
    }
    return 0.5 * c;
  }

  State retract(const State& s, const Eigen::VectorXd& dx) const { return model.retract(s, dx); }
};

Mat3 frame_from_axis(const Vec3& axis, int axis_column) {
  const Vec3 a = axis.normalized();
  const Vec3 u = a.unitOrthogonal();
  const Vec3 w = a.cross(u);
  Mat3 R;
  if (axis_column == 0) {
    R << a, u, w;
  } else {
    R << u, w, a;
  }
  return R;
}

struct Pca {
  Vec3 centroid;
  Vec3 values;  // ascending
  Mat3 vectors;
};

Pca pca(const Points& pts) {
  Pca p;
  p.centroid = pts.colwise().mean().transpose();
  const Points c = pts.rowwise() - p.centroid.transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> es(c.transpose() * c /
                                               static_cast<double>(pts.rows()));
  p.values = es.eigenvalues();
  p.vectors = es.eigenvectors();
  return p;
}

// Least-squares circle through 2-D points (algebraic form u^2+v^2+Du+Ev+F=0).
bool circle_fit(const Eigen::MatrixX2d& uv, Eigen::Vector2d& center, double& radius) {
  Eigen::MatrixXd A(uv.rows(), 3);
  Eigen::VectorXd b(uv.rows());
  for (Eigen::Index i = 0; i < uv.rows(); ++i) {
    A(i, 0) = uv(i, 0), A(i, 1) = uv(i, 1), A(i, 2) = 1.0;
    b(i) = -(uv(i, 0) * uv(i, 0) + uv(i, 1) * uv(i, 1));
  }
  const Eigen::Vector3d s = A.colPivHouseholderQr().solve(b);
  center = -0.5 * s.head<2>();
  const double r2 = center.squaredNorm() - s(2);
  if (!(r2 > 0.0) || !std::isfinite(r2)) return false;
  radius = std::sqrt(r2);
  return true;
}

std::optional<ModelState> sphere_start(const Points& pts) {
  Eigen::MatrixXd A(pts.rows(), 4);
  Eigen::VectorXd b(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    A.row(i) << 2 * pts(i, 0), 2 * pts(i, 1), 2 * pts(i, 2), 1.0;
    b(i) = pts.row(i).squaredNorm();
  }
  const Eigen::Vector4d s = A.colPivHouseholderQr().solve(b);
  const double r2 = s(3) + s.head<3>().squaredNorm();
  if (!(r2 > 0.0) || !std::isfinite(r2)) return std::nullopt;
  ModelState st;
  st.v.resize(4);
  st.v << s.head<3>(), 0.5 * std::log(r2);
  return st;
}

std::optional<ModelState> sphere_from_center(const Points& pts, const Vec3& c) {
  const double r = (pts.rowwise() - c.transpose()).rowwise().norm().mean();
  if (!(r > 0.0) || !std::isfinite(r)) return std::nullopt;
  ModelState st;
  st.v.resize(4);
  st.v << c, std::log(r);
  return st;
}

std::optional<ModelState> cylinder_from_axis(const Points& pts, const Vec3& axis) {
  if (!(axis.norm() > 0.0) || !axis.allFinite()) return std::nullopt;
  const Mat3 R = frame_from_axis(axis, 2);
  Eigen::MatrixX2d uv(pts.rows(), 2);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vec3 y = R.transpose() * pts.row(i).transpose();
    uv.row(i) << y(0), y(1);
  }
  Eigen::Vector2d c;
  double r;
  if (!circle_fit(uv, c, r)) return std::nullopt;
  ModelState st;
  st.R = R;
  st.v.resize(4);
  st.v << R.col(0) * c(0) + R.col(1) * c(1), std::log(r);
  return st;
}

std::optional<ModelState> cone_from_apex_axis(const Points& pts, const Vec3& apex,
                                              const Vec3& axis) {
  if (!(axis.norm() > 0.0) || !axis.allFinite() || !apex.allFinite()) return std::nullopt;
  const Points rel = pts.rowwise() - apex.transpose();
  // Open the nappe toward the points.
  const Vec3 a = (rel * axis).sum() >= 0.0 ? Vec3(axis) : Vec3(-axis);
  const Mat3 R = frame_from_axis(a, 2);
  double alpha = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vec3 y = R.transpose() * rel.row(i).transpose();
    alpha += std::atan2(std::hypot(y(0), y(1)), y(2));
  }
  alpha /= static_cast<double>(pts.rows());
  if (!(alpha > 0.0 && alpha < 0.5 * std::numbers::pi)) return std::nullopt;
  ModelState st;
  st.R = R;
  st.v.resize(4);
  st.v << apex, alpha;
  return st;
}

// Apex of a cone: every tangent plane n.(p - x) = 0 passes through it.
std::optional<Vec3> apex_from_normals(const Points& pts, const Points& normals) {
  Mat3 A = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vec3 n = normals.row(i).transpose();
    const Mat3 nn = n * n.transpose();
    A += nn;
    b += nn * pts.row(i).transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> es(A);
  if (es.eigenvalues()(0) <= 1e-6 * es.eigenvalues()(2)) return std::nullopt;
  return Vec3(A.ldlt().solve(b));
}

// Axis around which the unit directions from the apex keep a constant angle.
Vec3 cone_axis_from_apex(const Points& pts, const Vec3& apex) {
  std::vector<Vec3> dirs;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vec3 d = pts.row(i).transpose() - apex;
    if (d.norm() > 1e-9) dirs.push_back(d.normalized());
  }
  if (dirs.size() < 3) return Vec3::Zero();
  Vec3 mean = Vec3::Zero();
  for (const auto& d : dirs) mean += d;
  mean /= static_cast<double>(dirs.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& d : dirs) cov += (d - mean) * (d - mean).transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  return es.eigenvectors().col(0);
}

Vec3 smallest_eigenvector(const Points& normals, bool centered) {
  Vec3 mean = centered ? Vec3(normals.colwise().mean().transpose()) : Vec3::Zero();
  const Points c = normals.rowwise() - mean.transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> es(c.transpose() * c);
  return es.eigenvectors().col(0);
}

std::vector<ModelState> initial_states(QuadricKind kind, const Points& pts,
                                       const Points* normals, const FitOptions& options) {
  std::vector<ModelState> starts;
  const auto push = [&](const std::optional<ModelState>& s) {
    if (s) starts.push_back(*s);
  };
  const Pca p = pca(pts);

  std::optional<CanonicalDecomposition> unc;
  if (pts.rows() >= 10) {
    try {
      Segment seg;
      seg.points = pts;
      const FitResult r = fit_unconstrained(seg, options);
      unc = decompose(r.quadric);
    } catch (const Error&) {
    }
  }

  Points estimated;
  if (!normals && kind != QuadricKind::Plane && kind != QuadricKind::Sphere &&
      pts.rows() > options.normal_neighbors) {
    try {
      estimated = estimate_normals(pts, options.normal_neighbors);
      normals = &estimated;
    } catch (const Error&) {
    }
  }

  switch (kind) {
    case QuadricKind::Plane: {
      ModelState st;
      st.R = frame_from_axis(p.vectors.col(0), 0);
      st.v.resize(1);
      st.v << Vec3(st.R.col(0)).dot(p.centroid);
      starts.push_back(st);
      break;
    }
    case QuadricKind::Sphere: {
      push(sphere_start(pts));
      if (unc) push(sphere_from_center(pts, unc->translation));
      break;
    }
    case QuadricKind::Cylinder: {
      if (normals) push(cylinder_from_axis(pts, smallest_eigenvector(*normals, false)));
      for (int i = 0; i < 3; ++i) push(cylinder_from_axis(pts, p.vectors.col(i)));
      if (unc) {
        int axis = 0;
        unc->lambdas.cwiseAbs().minCoeff(&axis);
        push(cylinder_from_axis(pts, unc->rotation.col(axis)));
      }
      break;
    }
    case QuadricKind::Cone: {
      if (normals) {
        if (const auto apex = apex_from_normals(pts, *normals)) {
          push(cone_from_apex_axis(pts, *apex, cone_axis_from_apex(pts, *apex)));
          push(cone_from_apex_axis(pts, *apex, smallest_eigenvector(*normals, true)));
        }
      }
      if (unc) {
        int pos = 0;
        for (int i = 0; i < 3; ++i) pos += unc->lambdas(i) > 0 ? 1 : 0;
        // The axis carries the minority sign.
        int axis = 2;
        for (int i = 0; i < 3; ++i) {
          if ((unc->lambdas(i) > 0) == (pos < 2) && unc->lambdas(i) != 0.0) axis = i;
        }
        push(cone_from_apex_axis(pts, unc->translation, unc->rotation.col(axis)));
        push(cone_from_apex_axis(pts, unc->translation,
                                 cone_axis_from_apex(pts, unc->translation)));
      }
      break;
    }
    default:
      throw InvalidArgument("unsupported constrained type");
  }
  return starts;
}

}  // namespace

FitResult fit_constrained(const Segment& seg, const QuadricType& type, const FitOptions& options) {
  const QuadricKind kind = type.kind();
  const int min_points = minimum_points(kind);
  const Points& pts = seg.points;
  if (pts.rows() < min_points) {
    throw DegenerateInput("too few points for a " + std::string(type.name()) + " fit");
  }
  if (!pts.allFinite()) throw InvalidArgument("segment has non-finite points");
  const Points* normals = options.use_normals && seg.has_normals() ? &*seg.normals : nullptr;
  const Eigen::VectorXd* weights = seg.weights ? &*seg.weights : nullptr;

  const Model model(kind);
  const FitProblem problem{model, pts, normals, weights, options.normal_weight};
  const auto starts = initial_states(kind, pts, normals, options);
  if (starts.empty()) throw DegenerateInput("no valid initialization for the " +
                                            std::string(type.name()) + " fit");

  // Screen every start with a short run, then refine the best one.
  std::optional<factor::LMResult<ModelState>> best;
  factor::LMConfig screen = options.lm;
  if (starts.size() > 1) screen.max_iters = std::min(screen.max_iters, kScreenIterations);
  for (const auto& s : starts) {
    auto r = factor::levenberg_marquardt(problem, s, screen);
    if (!std::isfinite(r.final_cost)) continue;
    if (!best || r.final_cost < best->final_cost) best = std::move(r);
  }
  if (!best) throw DegenerateInput("constrained fit diverged");
  if (!best->converged) {
    auto r = factor::levenberg_marquardt(problem, best->state, options.lm);
    r.iterations += best->iterations;
    if (std::isfinite(r.final_cost)) best = std::move(r);
  }

  FitResult out;
  out.quadric = normalize(model.compose_quadric(best->state));
  out.type = type;
  out.converged = best->converged;
  double total = 0.0;
  Eigen::Index inliers = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double d = model.distance(best->state, pts.row(i).transpose());
    total += d;
    if (d <= options.inlier_threshold) ++inliers;
  }
  out.residual = total / static_cast<double>(pts.rows());
  out.inlier_fraction = static_cast<double>(inliers) / static_cast<double>(pts.rows());
  return out;
}

}  // namespace quadrics::fit
