#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace quadrics {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec10 = Eigen::Matrix<double, 10, 1>;
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Per-axis 0/1 indicator, ordered like the sorted eigenvalues (a, b, c).
using Mask3 = std::array<int, 3>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input cannot support the requested estimate (too few points, rank loss).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed file or document; the message names the offending field/offset.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Positions with optional unit normals and per-point weights.
struct PointCloud {
  Points points;
  std::optional<Points> normals;
  std::optional<Eigen::VectorXd> weights;

  [[nodiscard]] Eigen::Index size() const { return points.rows(); }
  [[nodiscard]] bool has_normals() const { return normals.has_value(); }
};

/// A subset of a cloud believed to lie on a single quadric.
using Segment = PointCloud;

}  // namespace quadrics
