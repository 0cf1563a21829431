#include "quadrics/cli/structure_map.hpp"

#include <cmath>

namespace quadrics::cli {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct Grid {
  int rows = 0, cols = 0;
  std::vector<Vec3> v;
};

// Triangulates a rows x cols vertex grid, keeping faces inside the box.
void emit(Mesh& mesh, const Grid& g, const Vec3& lo, const Vec3& hi, bool wrap_cols) {
  const auto inside = [&](const Vec3& x) {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  };
  std::vector<int> index(g.v.size(), -1);
  const auto id = [&](int r, int c) {
    const auto k = static_cast<std::size_t>(r * g.cols + (wrap_cols ? c % g.cols : c));
    if (index[k] < 0) {
      index[k] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(g.v[k]);
    }
    return index[k];
  };
  const auto at = [&](int r, int c) -> const Vec3& {
    return g.v[static_cast<std::size_t>(r * g.cols + (wrap_cols ? c % g.cols : c))];
  };
  const int cmax = wrap_cols ? g.cols : g.cols - 1;
  for (int r = 0; r + 1 < g.rows; ++r) {
    for (int c = 0; c < cmax; ++c) {
      const bool a = inside(at(r, c)), b = inside(at(r, c + 1)), d = inside(at(r + 1, c)),
                 e = inside(at(r + 1, c + 1));
      if (a && b && e) mesh.faces.push_back({id(r, c), id(r, c + 1), id(r + 1, c + 1)});
      if (a && e && d) mesh.faces.push_back({id(r, c), id(r + 1, c + 1), id(r + 1, c)});
    }
  }
}

std::pair<double, double> extent(const Points& pts, const Vec3& origin, const Vec3& dir,
                                 double pad) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double s = dir.dot(pts.row(i).transpose() - origin);
    lo = std::min(lo, s), hi = std::max(hi, s);
  }
  const double p = pad * (hi - lo);
  return {lo - p, hi + p};
}

}  // namespace

Mesh tessellate(const Quadric& q, const QuadricType& type, const Points& inliers,
                const StructureMapConfig& config) {
  Mesh mesh;
  if (inliers.rows() == 0) return mesh;
  const Vec3 lo0 = inliers.colwise().minCoeff().transpose();
  const Vec3 hi0 = inliers.colwise().maxCoeff().transpose();
  const double pad = config.padding * std::max((hi0 - lo0).norm(), 1e-9);
  const Vec3 lo = lo0.array() - pad, hi = hi0.array() + pad;
  const CanonicalDecomposition c = decompose(q);
  const Mat3& R = c.rotation;
  const int na = config.angular_segments, nl = config.linear_segments;
  Grid g;
  switch (type.kind()) {
    case QuadricKind::Plane: {
      const Vec3 n = R.col(0), u = R.col(1), w = R.col(2);
      const Vec3 o = c.translation;
      const auto [u0, u1] = extent(inliers, o, u, config.padding);
      const auto [w0, w1] = extent(inliers, o, w, config.padding);
      g.rows = nl + 1, g.cols = nl + 1;
      for (int r = 0; r <= nl; ++r) {
        for (int k = 0; k <= nl; ++k) {
          const double a = u0 + (u1 - u0) * k / nl, b = w0 + (w1 - w0) * r / nl;
          g.v.push_back(o + a * u + b * w);
        }
      }
      (void)n;
      emit(mesh, g, lo, hi, false);
      break;
    }
    case QuadricKind::Sphere: {
      const double radius = c.scale(0);
      g.rows = na / 2 + 1, g.cols = na;
      for (int r = 0; r < g.rows; ++r) {
        const double th = kPi * r / (g.rows - 1);
        for (int k = 0; k < na; ++k) {
          const double ph = 2.0 * kPi * k / na;
          g.v.push_back(c.translation +
                        radius * Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                                      std::cos(th)));
        }
      }
      emit(mesh, g, lo, hi, true);
      break;
    }
    case QuadricKind::Cylinder:
    case QuadricKind::Cone: {
      const Vec3 a = R.col(2), u = R.col(0), w = R.col(1);
      const Vec3 o = c.translation;
      const auto [z0, z1] = extent(inliers, o, a, config.padding);
      const double slope =
          type.kind() == QuadricKind::Cone ? std::sqrt(std::abs(c.lambdas(2) / c.lambdas(0))) : 0.0;
      const double radius = c.scale(0);
      g.rows = nl + 1, g.cols = na;
      for (int r = 0; r <= nl; ++r) {
        const double z = z0 + (z1 - z0) * r / nl;
        const double rho = type.kind() == QuadricKind::Cone ? std::abs(z) * slope : radius;
        for (int k = 0; k < na; ++k) {
          const double ph = 2.0 * kPi * k / na;
          g.v.push_back(o + z * a + rho * (std::cos(ph) * u + std::sin(ph) * w));
        }
      }
      emit(mesh, g, lo, hi, true);
      break;
    }
    default:
      break;
  }
  return mesh;
}

void write_obj(std::ostream& out, const std::vector<Mesh>& meshes) {
  std::size_t base = 1;
  char buf[96];
  for (std::size_t k = 0; k < meshes.size(); ++k) {
    out << "o segment_" << k << '\n';
    for (const auto& v : meshes[k].vertices) {
      std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v(0), v(1), v(2));
      out << buf;
    }
    for (const auto& f : meshes[k].faces) {
      out << "f " << base + static_cast<std::size_t>(f[0]) << ' '
          << base + static_cast<std::size_t>(f[1]) << ' ' << base + static_cast<std::size_t>(f[2])
          << '\n';
    }
    base += meshes[k].vertices.size();
  }
}

}  // namespace quadrics::cli
