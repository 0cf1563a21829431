#include "quadrics/cli/config.hpp"

#include "quadrics/dataset/io.hpp"

namespace quadrics::cli {
namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw SchemaError(where_ + ": expected an object");
  }

  // Applies a handler per key; keys without a handler are rejected.
  template <typename F>
  void each(F&& handle) const {
    for (const auto& [key, v] : j_.items()) {
      if (!handle(key, v)) throw SchemaError(where_ + ": unknown key \"" + key + "\"");
    }
  }

  [[nodiscard]] double number(const json& v, const std::string& key) const {
    if (!v.is_number()) throw SchemaError(path(key) + ": expected a number");
    return v.get<double>();
  }
  [[nodiscard]] int integer(const json& v, const std::string& key) const {
    if (!v.is_number_integer()) throw SchemaError(path(key) + ": expected an integer");
    return v.get<int>();
  }
  [[nodiscard]] bool boolean(const json& v, const std::string& key) const {
    if (!v.is_boolean()) throw SchemaError(path(key) + ": expected a boolean");
    return v.get<bool>();
  }
  [[nodiscard]] std::string path(const std::string& key) const { return where_ + "." + key; }

 private:
  const json& j_;
  std::string where_;
};

void read_fit(const json& j, fit::FitOptions& f) {
  const Reader r(j, "fit");
  r.each([&](const std::string& k, const json& v) {
    if (k == "parsimony_factor") f.parsimony_factor = r.number(v, k);
    else if (k == "normal_weight") f.normal_weight = r.number(v, k);
    else if (k == "use_normals") f.use_normals = r.boolean(v, k);
    else if (k == "inlier_threshold") f.inlier_threshold = r.number(v, k);
    else if (k == "taubin") f.taubin = r.boolean(v, k);
    else if (k == "normal_neighbors") f.normal_neighbors = r.integer(v, k);
    else return false;
    return true;
  });
  if (!(f.parsimony_factor >= 1.0)) throw SchemaError("fit.parsimony_factor: must be >= 1");
  if (f.normal_neighbors < 3) throw SchemaError("fit.normal_neighbors: must be >= 3");
}

void read_lm(const json& j, factor::LMConfig& lm) {
  const Reader r(j, "lm");
  r.each([&](const std::string& k, const json& v) {
    if (k == "max_iters") lm.max_iters = r.integer(v, k);
    else if (k == "initial_damping") lm.initial_damping = r.number(v, k);
    else if (k == "step_tol") lm.step_tol = r.number(v, k);
    else if (k == "error_tol") lm.error_tol = r.number(v, k);
    else return false;
    return true;
  });
  if (lm.max_iters < 1) throw SchemaError("lm.max_iters: must be positive");
  if (!(lm.initial_damping > 0.0)) throw SchemaError("lm.initial_damping: must be positive");
}

void read_detect(const json& j, detect::ParseConfig& d) {
  const Reader r(j, "detect");
  r.each([&](const std::string& k, const json& v) {
    if (k == "k_neighbors") d.k_neighbors = r.integer(v, k);
    else if (k == "bandwidth") d.bandwidth = r.number(v, k);
    else if (k == "nms_radius") d.nms_radius = r.number(v, k);
    else if (k == "max_shift_iters") d.max_shift_iters = r.integer(v, k);
    else if (k == "shift_tolerance") d.shift_tolerance = r.number(v, k);
    else if (k == "max_shift_points") d.max_shift_points = r.integer(v, k);
    else if (k == "min_relative_density") d.min_relative_density = r.number(v, k);
    else if (k == "min_cluster_fraction") d.min_cluster_fraction = r.number(v, k);
    else if (k == "merge_factor") d.merge_factor = r.number(v, k);
    else if (k == "merge_tolerance") d.merge_tolerance = r.number(v, k);
    else if (k == "merge_sample") d.merge_sample = r.integer(v, k);
    else if (k == "relabel") d.relabel = r.boolean(v, k);
    else if (k == "candidate_types") {
      if (!v.is_array() || v.empty()) {
        throw SchemaError("detect.candidate_types: expected a nonempty array");
      }
      d.candidate_types.clear();
      for (const auto& t : v) {
        if (!t.is_string()) throw SchemaError("detect.candidate_types: expected type names");
        QuadricType type;
        try {
          type = QuadricType::from_name(t.get<std::string>());
        } catch (const InvalidArgument& e) {
          throw SchemaError(std::string("detect.candidate_types: ") + e.what());
        }
        const auto& prims = primitive_types();
        if (std::find(prims.begin(), prims.end(), type) == prims.end()) {
          throw SchemaError("detect.candidate_types: only plane, sphere, cylinder, cone");
        }
        d.candidate_types.push_back(type);
      }
    } else if (k == "feature_weights") {
      const Reader w(v, "detect.feature_weights");
      w.each([&](const std::string& fk, const json& fv) {
        if (fk == "position") d.feature_weights.position = w.number(fv, fk);
        else if (fk == "normal") d.feature_weights.normal = w.number(fv, fk);
        else if (fk == "curvature") d.feature_weights.curvature = w.number(fv, fk);
        else return false;
        return true;
      });
    } else {
      return false;
    }
    return true;
  });
  if (d.k_neighbors < 8) throw SchemaError("detect.k_neighbors: must be >= 8");
  if (!(d.bandwidth > 0.0)) throw SchemaError("detect.bandwidth: must be positive");
  if (!(d.nms_radius > 0.0)) throw SchemaError("detect.nms_radius: must be positive");
}

void read_metrics(const json& j, ToolkitConfig& c) {
  const Reader r(j, "metrics");
  r.each([&](const std::string& k, const json& v) {
    if (k == "epsilons") {
      if (!v.is_array() || v.empty()) throw SchemaError("metrics.epsilons: expected an array");
      c.epsilons.clear();
      for (const auto& e : v) c.epsilons.push_back(r.number(e, k));
    } else if (k == "residual_grouping") {
      if (v == "ground_truth") c.residual_grouping = metrics::ResidualGrouping::GroundTruth;
      else if (v == "predicted") c.residual_grouping = metrics::ResidualGrouping::Predicted;
      else throw SchemaError("metrics.residual_grouping: expected ground_truth or predicted");
    } else {
      return false;
    }
    return true;
  });
}

void read_structure(const json& j, StructureMapConfig& s) {
  const Reader r(j, "structure_map");
  r.each([&](const std::string& k, const json& v) {
    if (k == "angular_segments") s.angular_segments = r.integer(v, k);
    else if (k == "linear_segments") s.linear_segments = r.integer(v, k);
    else if (k == "padding") s.padding = r.number(v, k);
    else return false;
    return true;
  });
  if (s.angular_segments < 3 || s.linear_segments < 1) {
    throw SchemaError("structure_map: resolution too small");
  }
}

}  // namespace

ToolkitConfig config_from_json(const json& j, const ToolkitConfig& base) {
  ToolkitConfig c = base;
  const Reader r(j, "config");
  r.each([&](const std::string& k, const json& v) {
    if (k == "generator") c.generator = dataset::generator_config_from_json(v, c.generator);
    else if (k == "corpus") {
      const Reader cr(v, "corpus");
      cr.each([&](const std::string& ck, const json& cv) {
        if (ck != "objects") return false;
        if (!cv.is_number_unsigned()) throw SchemaError("corpus.objects: expected a count");
        c.objects = cv.get<std::size_t>();
        return true;
      });
    } else if (k == "fit") read_fit(v, c.detect.fit);
    else if (k == "lm") read_lm(v, c.detect.fit.lm);
    else if (k == "detect") read_detect(v, c.detect);
    else if (k == "metrics") read_metrics(v, c);
    else if (k == "structure_map") read_structure(v, c.structure_map);
    else return false;
    return true;
  });
  c.generator.validate();
  return c;
}

json to_json(const ToolkitConfig& c) {
  const auto& d = c.detect;
  const auto& f = d.fit;
  json types = json::array();
  for (const auto& t : d.candidate_types) types.push_back(std::string(t.name()));
  return {
      {"generator", dataset::to_json(c.generator)},
      {"corpus", {{"objects", c.objects}}},
      {"fit",
       {{"parsimony_factor", f.parsimony_factor},
        {"normal_weight", f.normal_weight},
        {"use_normals", f.use_normals},
        {"inlier_threshold", f.inlier_threshold},
        {"taubin", f.taubin},
        {"normal_neighbors", f.normal_neighbors}}},
      {"lm",
       {{"max_iters", f.lm.max_iters},
        {"initial_damping", f.lm.initial_damping},
        {"step_tol", f.lm.step_tol},
        {"error_tol", f.lm.error_tol}}},
      {"detect",
       {{"k_neighbors", d.k_neighbors},
        {"bandwidth", d.bandwidth},
        {"nms_radius", d.nms_radius},
        {"max_shift_iters", d.max_shift_iters},
        {"shift_tolerance", d.shift_tolerance},
        {"max_shift_points", d.max_shift_points},
        {"min_relative_density", d.min_relative_density},
        {"min_cluster_fraction", d.min_cluster_fraction},
        {"candidate_types", types},
        {"merge_factor", d.merge_factor},
        {"merge_tolerance", d.merge_tolerance},
        {"merge_sample", d.merge_sample},
        {"relabel", d.relabel},
        {"feature_weights",
         {{"position", d.feature_weights.position},
          {"normal", d.feature_weights.normal},
          {"curvature", d.feature_weights.curvature}}}}},
      {"metrics",
       {{"epsilons", c.epsilons},
        {"residual_grouping", c.residual_grouping == metrics::ResidualGrouping::GroundTruth
                                  ? "ground_truth"
                                  : "predicted"}}},
      {"structure_map",
       {{"angular_segments", c.structure_map.angular_segments},
        {"linear_segments", c.structure_map.linear_segments},
        {"padding", c.structure_map.padding}}},
  };
}

ToolkitConfig load_config(const std::filesystem::path& path) {
  return config_from_json(dataset::read_json(path));
}

}  // namespace quadrics::cli
