#include "quadrics/dataset/generator.hpp"

#include "quadrics/core/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace quadrics::dataset {
namespace {

constexpr double kPi = 3.14159265358979323846;

void check_range(const Range& r, const char* name, bool positive) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi) ||
      (positive && !(r.lo > 0.0))) {
    throw InvalidArgument(std::string("invalid range for ") + name);
  }
}

// Shape sampled in its local frame; placement applies R and the center.
struct LocalPatch {
  Points points;
  Points normals;
  Vec3 lambdas;
  double c44 = 0.0;
  Vec3 origin = Vec3::Zero();  // canonical center in local coordinates
  Vec3 center = Vec3::Zero();  // patch center in local coordinates
  Vec3 trim_axis = Vec3::UnitZ();
};

LocalPatch sample_local(QuadricKind kind, const GeneratorConfig& c, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(c.points_per_segment);
  LocalPatch p;
  p.points.resize(n, 3);
  p.normals.resize(n, 3);
  switch (kind) {
    case QuadricKind::Plane: {
      const double s = rng.uniform(c.plane_extent.lo, c.plane_extent.hi);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u = rng.uniform(-0.5, 0.5) * s;
        const double v = rng.uniform(-0.5, 0.5) * s;
        p.points.row(i) << 0.0, u, v;
        p.normals.row(i) << 1.0, 0.0, 0.0;
      }
      p.lambdas = Vec3(1, 0, 0);
      p.trim_axis = Vec3::UnitX();
      break;
    }
    case QuadricKind::Sphere: {
      const double r = rng.uniform(c.sphere_radius.lo, c.sphere_radius.hi);
      const bool full = rng.uniform() < c.full_sphere_probability;
      const double cos_max = full ? -1.0 : std::cos(rng.uniform(kPi / 3.0, kPi));
      for (Eigen::Index i = 0; i < n; ++i) {
        const double z = rng.uniform(cos_max, 1.0);
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        const Vec3 d(s * std::cos(phi), s * std::sin(phi), z);
        p.points.row(i) = (r * d).transpose();
        p.normals.row(i) = d.transpose();
      }
      p.lambdas = Vec3::Constant(1.0 / (r * r));
      p.c44 = -1.0;
      p.center = full ? Vec3::Zero() : Vec3(0, 0, r * 0.5 * (1.0 + cos_max));
      break;
    }
    case QuadricKind::Cylinder: {
      const double r = rng.uniform(c.cylinder_radius.lo, c.cylinder_radius.hi);
      const double len = rng.uniform(c.cylinder_length.lo, c.cylinder_length.hi);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        const double z = rng.uniform(-0.5, 0.5) * len;
        p.points.row(i) << r * std::cos(phi), r * std::sin(phi), z;
        p.normals.row(i) << std::cos(phi), std::sin(phi), 0.0;
      }
      p.lambdas = Vec3(1.0 / (r * r), 1.0 / (r * r), 0.0);
      p.c44 = -1.0;
      break;
    }
    case QuadricKind::Cone: {
      const double alpha = rng.uniform(c.cone_half_angle.lo, c.cone_half_angle.hi) * kPi / 180.0;
      const double h = rng.uniform(c.cone_height.lo, c.cone_height.hi);
      // Frustum z in [h/4, h]: the apex is excluded. Area density grows with z.
      const double z0 = 0.25 * h, z1 = h;
      const double ta = std::tan(alpha);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double z = std::sqrt(z0 * z0 + rng.uniform() * (z1 * z1 - z0 * z0));
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        p.points.row(i) << z * ta * std::cos(phi), z * ta * std::sin(phi), z;
        p.normals.row(i) << std::cos(alpha) * std::cos(phi), std::cos(alpha) * std::sin(phi),
            -std::sin(alpha);
      }
      p.lambdas = Vec3(1.0 / (ta * ta), 1.0 / (ta * ta), -1.0);
      p.c44 = 0.0;
      p.center = Vec3(0, 0, 2.0 * (z1 * z1 * z1 - z0 * z0 * z0) / (3.0 * (z1 * z1 - z0 * z0)));
      break;
    }
    default:
      throw InvalidArgument("generator supports plane, sphere, cylinder and cone");
  }
  return p;
}

// Keeps the `keep` fraction of points with the lowest score.
void keep_lowest(LocalPatch& p, const std::vector<double>& score, double keep) {
  const auto n = static_cast<Eigen::Index>(score.size());
  std::vector<Eigen::Index> order(score.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return score[a] < score[b]; });
  const auto m = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(keep * n)));
  std::sort(order.begin(), order.begin() + m);
  Points pts(m, 3), nrm(m, 3);
  for (Eigen::Index i = 0; i < m; ++i) {
    pts.row(i) = p.points.row(order[i]);
    nrm.row(i) = p.normals.row(order[i]);
  }
  p.points = std::move(pts);
  p.normals = std::move(nrm);
}

void trim(LocalPatch& p, const GeneratorConfig& c, Rng& rng) {
  if (!(rng.uniform() < c.trim_probability)) return;
  const double keep = rng.uniform(0.25, 0.9);
  const bool sector = rng.uniform() < 0.5;
  std::vector<double> score(static_cast<std::size_t>(p.points.rows()));
  if (sector) {
    const Vec3 a = p.trim_axis;
    const Vec3 u = a.unitOrthogonal();
    const Vec3 w = a.cross(u);
    const double phi0 = rng.uniform(0.0, 2.0 * kPi);
    for (Eigen::Index i = 0; i < p.points.rows(); ++i) {
      const Vec3 d = p.points.row(i).transpose() - p.center;
      double phi = std::atan2(d.dot(w), d.dot(u)) - phi0;
      phi = std::fmod(phi + 4.0 * kPi, 2.0 * kPi);
      score[static_cast<std::size_t>(i)] = phi;
    }
  } else {
    const Vec3 d = rotation_from_uniforms(rng.uniform(), rng.uniform(), rng.uniform()).col(0);
    for (Eigen::Index i = 0; i < p.points.rows(); ++i) {
      score[static_cast<std::size_t>(i)] = d.dot(p.points.row(i).transpose());
    }
  }
  keep_lowest(p, score, keep);
}

struct Shape {
  LocalPatch local;
  QuadricType type;
  Mat3 R;
};

GeneratedSegment place(const Shape& s, const Vec3& center, const GeneratorConfig& c,
                       Rng& rng) {
  GeneratedSegment g;
  const Eigen::Index n = s.local.points.rows();
  // x = R (p - center_local) + center
  const Vec3 offset = center - s.R * s.local.center;
  g.clean.resize(n, 3);
  g.segment.points.resize(n, 3);
  Points normals(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 x = s.R * s.local.points.row(i).transpose() + offset;
    const Vec3 nrm = s.R * s.local.normals.row(i).transpose();
    g.clean.row(i) = x.transpose();
    normals.row(i) = nrm.transpose();
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = c.noise_amplitude > 0.0
                         ? rng.uniform(-c.noise_amplitude, c.noise_amplitude)
                         : 0.0;
    g.segment.points.row(i) = g.clean.row(i) + u * normals.row(i);
  }
  g.segment.normals = std::move(normals);
  const Vec3 t = s.R * s.local.origin + offset;
  g.truth.quadric = normalize(compose(s.local.lambdas, s.local.c44, s.R, t));
  g.truth.type = s.type;
  g.truth.decomposition = decompose(g.truth.quadric);
  g.truth.point_count = n;
  g.truth.center = center;
  return g;
}

Shape sample_shape(const QuadricType& type, const GeneratorConfig& c, Rng& rng) {
  Shape s;
  s.type = type;
  s.local = sample_local(type.kind(), c, rng);
  s.R = rotation_from_uniforms(rng.uniform(), rng.uniform(), rng.uniform());
  trim(s.local, c, rng);
  return s;
}

Vec3 random_center(Rng& rng) {
  const double x = rng.uniform(-0.5, 0.5);
  const double y = rng.uniform(-0.5, 0.5);
  const double z = rng.uniform(-0.5, 0.5);
  return {x, y, z};
}

}  // namespace

void GeneratorConfig::validate() const {
  if (points_per_segment < 10) throw InvalidArgument("points_per_segment must be at least 10");
  if (!(noise_amplitude >= 0.0) || !std::isfinite(noise_amplitude)) {
    throw InvalidArgument("noise_amplitude must be nonnegative");
  }
  if (!(trim_probability >= 0.0 && trim_probability <= 1.0)) {
    throw InvalidArgument("trim_probability must lie in [0, 1]");
  }
  if (min_segments < 1 || max_segments < min_segments) {
    throw InvalidArgument("segments_per_object must satisfy 1 <= min <= max");
  }
  double total = 0.0;
  for (double w : type_mix) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("type_mix entries must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("type_mix must have a positive entry");
  check_range(plane_extent, "plane_extent", true);
  check_range(sphere_radius, "sphere_radius", true);
  check_range(cylinder_radius, "cylinder_radius", true);
  check_range(cylinder_length, "cylinder_length", true);
  check_range(cone_half_angle, "cone_half_angle", true);
  check_range(cone_height, "cone_height", true);
  if (!(cone_half_angle.hi < 90.0)) throw InvalidArgument("cone_half_angle must stay below 90");
  if (!(min_separation >= 0.0)) throw InvalidArgument("min_separation must be nonnegative");
  if (!(full_sphere_probability >= 0.0 && full_sphere_probability <= 1.0)) {
    throw InvalidArgument("full_sphere_probability must lie in [0, 1]");
  }
}

GeneratedSegment generate_segment(const QuadricType& type, const GeneratorConfig& config,
                                  Rng& rng) {
  config.validate();
  const Shape s = sample_shape(type, config, rng);
  const Vec3 center = random_center(rng);
  return place(s, center, config, rng);
}

GeneratedObject generate_object(const GeneratorConfig& config, Rng& rng) {
  config.validate();
  const int count = config.min_segments == config.max_segments
                        ? config.min_segments
                        : static_cast<int>(rng.integer(config.min_segments, config.max_segments));
  const auto& types = primitive_types();
  int nonzero = 0;
  for (double w : config.type_mix) nonzero += w > 0.0 ? 1 : 0;
  const double total = std::accumulate(config.type_mix.begin(), config.type_mix.end(), 0.0);

  GeneratedObject obj;
  std::vector<GeneratedSegment> parts;
  for (int k = 0; k < count; ++k) {
    std::size_t ti = 0;
    if (nonzero == 1) {
      while (config.type_mix[ti] <= 0.0) ++ti;
    } else {
      double u = rng.uniform() * total;
      ti = 0;
      while (ti + 1 < types.size() && u >= config.type_mix[ti]) u -= config.type_mix[ti++];
      while (config.type_mix[ti] <= 0.0) --ti;
    }
    const Shape s = sample_shape(types[ti], config, rng);
    Vec3 center = random_center(rng);
    // Rejection sampling of the placement; the last draw is kept if no
    // separated position is found.
    for (int attempt = 0; attempt < 200; ++attempt) {
      bool ok = true;
      for (const auto& p : parts) {
        if ((p.truth.center - center).norm() < config.min_separation) ok = false;
      }
      if (ok) break;
      center = random_center(rng);
    }
    parts.push_back(place(s, center, config, rng));
  }

  Eigen::Index total_points = 0;
  for (const auto& p : parts) total_points += p.segment.points.rows();
  obj.cloud.points.resize(total_points, 3);
  Points normals(total_points, 3);
  obj.clean.resize(total_points, 3);
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& p = parts[k];
    const Eigen::Index n = p.segment.points.rows();
    obj.cloud.points.middleRows(row, n) = p.segment.points;
    normals.middleRows(row, n) = *p.segment.normals;
    obj.clean.middleRows(row, n) = p.clean;
    obj.labels.insert(obj.labels.end(), static_cast<std::size_t>(n), static_cast<int>(k));
    obj.segments.push_back(p.truth);
    row += n;
  }
  obj.cloud.normals = std::move(normals);
  return obj;
}

GeneratedObject generate_item(const GeneratorConfig& config, std::uint64_t index) {
  Rng rng(config.seed ^ index);
  return generate_object(config, rng);
}

namespace {

nlohmann::json range_json(const Range& r) { return nlohmann::json::array({r.lo, r.hi}); }

Range range_from(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw SchemaError("generator." + key + ": expected [lo, hi]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

nlohmann::json to_json(const GeneratorConfig& c) {
  return {
      {"seed", c.seed},
      {"points_per_segment", c.points_per_segment},
      {"noise_amplitude", c.noise_amplitude},
      {"trim_probability", c.trim_probability},
      {"segments_per_object", nlohmann::json::array({c.min_segments, c.max_segments})},
      {"type_mix", {{"plane", c.type_mix[0]},
                    {"sphere", c.type_mix[1]},
                    {"cylinder", c.type_mix[2]},
                    {"cone", c.type_mix[3]}}},
      {"plane_extent", range_json(c.plane_extent)},
      {"sphere_radius", range_json(c.sphere_radius)},
      {"cylinder_radius", range_json(c.cylinder_radius)},
      {"cylinder_length", range_json(c.cylinder_length)},
      {"cone_half_angle", range_json(c.cone_half_angle)},
      {"cone_height", range_json(c.cone_height)},
      {"min_separation", c.min_separation},
      {"full_sphere_probability", c.full_sphere_probability},
      {"point_precision", c.precision == Precision::Float32 ? "float32" : "float64"},
  };
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j, const GeneratorConfig& base) {
  if (!j.is_object()) throw SchemaError("generator: expected an object");
  GeneratorConfig c = base;
  const auto number = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw SchemaError("generator." + key + ": expected a number");
    return v.get<double>();
  };
  const auto integer = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer()) throw SchemaError("generator." + key + ": expected an integer");
    return v.get<long long>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "seed") {
      if (!v.is_number_unsigned() && !v.is_number_integer()) {
        throw SchemaError("generator.seed: expected an unsigned integer");
      }
      c.seed = v.get<std::uint64_t>();
    } else if (key == "points_per_segment") {
      c.points_per_segment = static_cast<int>(integer(v, key));
    } else if (key == "noise_amplitude") {
      c.noise_amplitude = number(v, key);
    } else if (key == "trim_probability") {
      c.trim_probability = number(v, key);
    } else if (key == "segments_per_object") {
      if (!v.is_array() || v.size() != 2) {
        throw SchemaError("generator.segments_per_object: expected [min, max]");
      }
      c.min_segments = static_cast<int>(integer(v[0], key));
      c.max_segments = static_cast<int>(integer(v[1], key));
    } else if (key == "type_mix") {
      if (!v.is_object()) throw SchemaError("generator.type_mix: expected an object");
      for (const auto& [name, w] : v.items()) {
        const QuadricType t = QuadricType::from_name(name);
        const auto& types = primitive_types();
        const auto it = std::find(types.begin(), types.end(), t);
        if (it == types.end()) throw SchemaError("generator.type_mix." + name + ": unknown type");
        c.type_mix[static_cast<std::size_t>(it - types.begin())] = number(w, "type_mix." + name);
      }
    } else if (key == "plane_extent") {
      c.plane_extent = range_from(v, key);
    } else if (key == "sphere_radius") {
      c.sphere_radius = range_from(v, key);
    } else if (key == "cylinder_radius") {
      c.cylinder_radius = range_from(v, key);
    } else if (key == "cylinder_length") {
      c.cylinder_length = range_from(v, key);
    } else if (key == "cone_half_angle") {
      c.cone_half_angle = range_from(v, key);
    } else if (key == "cone_height") {
      c.cone_height = range_from(v, key);
    } else if (key == "min_separation") {
      c.min_separation = number(v, key);
    } else if (key == "full_sphere_probability") {
      c.full_sphere_probability = number(v, key);
    } else if (key == "point_precision") {
      if (v == "float32") {
        c.precision = Precision::Float32;
      } else if (v == "float64") {
        c.precision = Precision::Float64;
      } else {
        throw SchemaError("generator.point_precision: expected \"float32\" or \"float64\"");
      }
    } else {
      throw SchemaError("generator: unknown key \"" + key + "\"");
    }
  }
  return c;
}

}  // namespace quadrics::dataset
