#pragma once

#include "quadrics/core/decomposition.hpp"

#include <json.hpp>

namespace quadrics {

/// {"coeffs":[A..J], "type":..., "scale":[3], "rotation":[9 row-major],
///  "translation":[3], "masks":{"s":[3],"R":[3],"t":[3]}}
nlohmann::json to_json(const Quadric& q, const Tolerances& tol = {});

/// Reads a quadric back from its "coeffs" array; every other field is
/// derived data and is ignored. Throws SchemaError naming the bad field.
Quadric quadric_from_json(const nlohmann::json& j, std::string_view where = "quadric");

nlohmann::json to_json(const DegeneracyMasks& m);

/// Helpers shared by the file schemas.
nlohmann::json vec_to_json(const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::VectorXd vec_from_json(const nlohmann::json& j, std::string_view where,
                              Eigen::Index expected_size = -1);
const nlohmann::json& require(const nlohmann::json& j, std::string_view key,
                              std::string_view where);

}  // namespace quadrics
