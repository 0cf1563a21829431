#include "quadrics/core/serialize.hpp"

#include <cmath>

namespace quadrics {

nlohmann::json vec_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

const nlohmann::json& require(const nlohmann::json& j, std::string_view key,
                              std::string_view where) {
  if (!j.is_object()) {
    throw SchemaError(std::string(where) + ": expected an object");
  }
  const auto it = j.find(std::string(key));
  if (it == j.end()) {
    throw SchemaError(std::string(where) + ": missing field '" + std::string(key) + "'");
  }
  return *it;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j, std::string_view where,
                              Eigen::Index expected_size) {
  if (!j.is_array()) throw SchemaError(std::string(where) + ": expected an array");
  if (expected_size >= 0 && static_cast<Eigen::Index>(j.size()) != expected_size) {
    throw SchemaError(std::string(where) + ": expected " + std::to_string(expected_size) +
                      " numbers, got " + std::to_string(j.size()));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw SchemaError(std::string(where) + "[" + std::to_string(i) + "]: expected a number");
    }
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

nlohmann::json to_json(const DegeneracyMasks& m) {
  return {{"s", m.scale}, {"R", m.rotation}, {"t", m.translation}};
}

nlohmann::json to_json(const Quadric& q, const Tolerances& tol) {
  const CanonicalDecomposition c = decompose(q, tol);
  nlohmann::json j;
  j["coeffs"] = vec_to_json(q.coeffs());
  j["type"] = std::string(classify(c, tol).name());
  j["scale"] = vec_to_json(c.scale);
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) rot.push_back(c.rotation(r, col));
  }
  j["rotation"] = rot;
  j["translation"] = vec_to_json(c.translation);
  j["masks"] = to_json(c.masks);
  return j;
}

Quadric quadric_from_json(const nlohmann::json& j, std::string_view where) {
  const std::string path = std::string(where) + ".coeffs";
  const Vec10 c = vec_from_json(require(j, "coeffs", where), path, 10);
  try {
    return Quadric(c);
  } catch (const InvalidArgument& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

}  // namespace quadrics
