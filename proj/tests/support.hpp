#pragma once

#include "quadrics/core/decomposition.hpp"
#include "quadrics/core/rotation.hpp"
#include "quadrics/dataset/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace quadrics::testing {

inline Mat3 random_rotation(dataset::Rng& rng) {
  return rotation_from_uniforms(rng.uniform(), rng.uniform(), rng.uniform());
}

inline Vec3 random_vector(dataset::Rng& rng, double lo = -1.0, double hi = 1.0) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

/// Magnitudes spread apart so duplicate-eigenvalue tests never trigger by chance.
inline Vec3 distinct_magnitudes(dataset::Rng& rng) {
  Vec3 m;
  m(0) = rng.uniform(0.3, 0.9);
  m(1) = m(0) + rng.uniform(0.3, 0.9);
  m(2) = m(1) + rng.uniform(0.3, 0.9);
  return m;
}

/// Canonical diagonal and pose for a random instance of `kind`. Ellipsoid
/// draws distinct semi-axes; Other is a one-sheet hyperboloid.
struct Canonical {
  Vec3 lambdas;
  double c44;
  Mat3 R;
  Vec3 t;
};

inline Canonical random_canonical(QuadricKind kind, dataset::Rng& rng) {
  Canonical c{Vec3::Zero(), -1.0, random_rotation(rng), random_vector(rng)};
  const Vec3 m = distinct_magnitudes(rng);
  switch (kind) {
    case QuadricKind::Plane:
      c.lambdas << m(0), 0, 0;
      c.c44 = 0.0;
      break;
    case QuadricKind::Line:
      c.lambdas << m(1), m(0), 0;
      c.c44 = 0.0;
      break;
    case QuadricKind::Sphere:
      c.lambdas.setConstant(m(0));
      break;
    case QuadricKind::Cylinder:
      c.lambdas << m(1), m(0), 0;
      break;
    case QuadricKind::Cone:
      c.lambdas << m(1), m(0), -m(2);
      c.c44 = 0.0;
      break;
    case QuadricKind::Ellipsoid:
      c.lambdas << m(2), m(1), m(0);
      break;
    case QuadricKind::Other:
      c.lambdas << m(2), m(1), -m(0);
      break;
  }
  return c;
}

inline Quadric random_quadric(QuadricKind kind, dataset::Rng& rng) {
  const Canonical c = random_canonical(kind, rng);
  return compose(c.lambdas, c.c44, c.R, c.t);
}

/// Random full-rank quadric with a random proportional factor of either sign.
inline Quadric random_nondegenerate(dataset::Rng& rng) {
  const QuadricKind kind = rng.uniform() < 0.5 ? QuadricKind::Ellipsoid : QuadricKind::Other;
  const double alpha = rng.uniform(0.1, 10.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  return random_quadric(kind, rng).scaled(alpha);
}

inline double max_abs_diff(const Mat4& a, const Mat4& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("quadrics_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// FNV-1a over every regular file (name and bytes) in sorted name order.
inline std::uint64_t hash_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&](const std::string& s) {
    for (const unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& f : files) {
    mix(f.filename().string());
    mix(read_bytes(f));
  }
  return h;
}

}  // namespace quadrics::testing
