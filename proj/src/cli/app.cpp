#include "quadrics/cli/app.hpp"

#include "quadrics/cli/config.hpp"
#include "quadrics/cli/structure_map.hpp"
#include "quadrics/core/rotation.hpp"
#include "quadrics/core/serialize.hpp"
#include "quadrics/dataset/io.hpp"
#include "quadrics/factor/factor.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

namespace quadrics::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {
    if (const char* v = std::getenv("QUADRICS_LOG")) {
      const std::string s(v);
      if (s == "error") level_ = Level::Error;
      else if (s == "warn") level_ = Level::Warn;
      else if (s == "info") level_ = Level::Info;
      else if (s == "debug") level_ = Level::Debug;
    }
  }
  void operator()(Level l, const std::string& msg) {
    if (l > level_) return;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    const std::lock_guard lock(mutex_);
    err_ << "[" << names[static_cast<int>(l)] << "] " << msg << '\n';
  }

 private:
  std::ostream& err_;
  Level level_ = Level::Warn;
  std::mutex mutex_;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out;
};

ToolkitConfig effective_config(const Common& c) {
  ToolkitConfig cfg = c.config_path.empty() ? ToolkitConfig{} : load_config(c.config_path);
  if (c.seed) cfg.generator.seed = *c.seed;
  return cfg;
}

void emit(const json& j, const Common& c, const std::string& name, std::ostream& out) {
  if (c.out.empty()) {
    out << j.dump(2) << '\n';
  } else {
    fs::create_directories(c.out);
    dataset::write_json(fs::path(c.out) / name, j);
  }
}

template <typename F>
void parallel_for(std::size_t count, int threads, F&& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex m;
  const auto work = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        const std::lock_guard lock(m);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::max(1, threads); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- generate -------------------------------------------------------------

int cmd_generate(const Common& c, std::optional<std::size_t> objects, Log& log) {
  if (c.out.empty()) throw InvalidArgument("generate needs --out DIR");
  ToolkitConfig cfg = effective_config(c);
  const std::size_t n = objects.value_or(cfg.objects);
  log(Level::Info, "generating " + std::to_string(n) + " objects into " + c.out);
  dataset::generate_dataset(c.out, cfg.generator, n, {{"config", to_json(cfg)}}, c.threads);
  return kSuccess;
}

// ---- fit ------------------------------------------------------------------

int cmd_fit(const Common& c, const std::string& input, const std::string& type_name,
            std::ostream& out) {
  const ToolkitConfig cfg = effective_config(c);
  const dataset::PlyCloud ply = dataset::read_ply(input);
  fit::FitResult r;
  if (type_name == "auto") {
    r = fit::fit_auto(ply.cloud, cfg.detect.candidate_types, cfg.detect.fit);
  } else if (type_name == "unconstrained") {
    r = fit::fit_unconstrained(ply.cloud, cfg.detect.fit);
  } else {
    r = fit::fit_constrained(ply.cloud, QuadricType::from_name(type_name), cfg.detect.fit);
  }
  json j = fit::to_json(r);
  j["input"] = fs::path(input).filename().string();
  j["point_count"] = ply.cloud.size();
  j["config"] = to_json(cfg);
  emit(j, c, "fit.json", out);
  return r.converged ? kSuccess : kNumericalFailure;
}

// ---- parse ----------------------------------------------------------------

struct ParseOutput {
  json j;
  std::vector<Mesh> meshes;
  bool clean = true;
};

ParseOutput parse_cloud(const PointCloud& cloud, const ToolkitConfig& cfg,
                        const std::string& name, bool want_mesh) {
  const detect::ParseResult r = detect::parse(cloud, cfg.detect);
  ParseOutput o;
  json segs = json::array();
  for (int k = 0; k < r.membership.count; ++k) {
    const auto& f = r.fits[static_cast<std::size_t>(k)];
    const auto& e = r.errors[static_cast<std::size_t>(k)];
    json s;
    if (e.empty()) {
      s = fit::to_json(f);
    } else {
      s = {{"type", std::string(f.type.name())}, {"error", e}, {"converged", false}};
    }
    const auto members = r.membership.members(k);
    s["point_count"] = members.size();
    if (!e.empty() || !f.converged) o.clean = false;
    segs.push_back(s);
    if (want_mesh && e.empty()) {
      Points inl(static_cast<Eigen::Index>(members.size()), 3);
      for (std::size_t i = 0; i < members.size(); ++i) {
        inl.row(static_cast<Eigen::Index>(i)) = cloud.points.row(members[i]);
      }
      o.meshes.push_back(tessellate(f.quadric, f.type, inl, cfg.structure_map));
    }
  }
  o.j = {{"input", name},
         {"point_count", cloud.size()},
         {"initial_segments", r.initial_segments},
         {"labels", r.membership.labels},
         {"segments", segs},
         {"config", to_json(cfg)}};
  return o;
}

std::string stem_of(const fs::path& p) { return p.stem().string(); }

int cmd_parse(const Common& c, const std::string& input, bool structure_map, std::ostream& out,
              Log& log) {
  const ToolkitConfig cfg = effective_config(c);
  if (fs::is_directory(input)) {
    if (c.out.empty()) throw InvalidArgument("parsing a corpus needs --out DIR");
    dataset::DatasetReader reader(input);
    fs::create_directories(c.out);
    std::atomic<bool> clean{true};
    parallel_for(reader.size(), c.threads, [&](std::size_t i) {
      const dataset::DatasetItem item = reader.read(i);
      const std::string stem = "object_" + [&] {
        char b[16];
        std::snprintf(b, sizeof b, "%05zu", i);
        return std::string(b);
      }();
      ParseOutput o = parse_cloud(item.cloud, cfg, stem + ".ply", structure_map);
      dataset::write_json(fs::path(c.out) / (stem + ".parse.json"), o.j);
      if (structure_map) {
        std::ofstream obj(fs::path(c.out) / (stem + ".obj"));
        write_obj(obj, o.meshes);
      }
      if (!o.clean) clean = false;
      log(Level::Info, "parsed " + stem);
    });
    return clean ? kSuccess : kNumericalFailure;
  }
  const dataset::PlyCloud ply = dataset::read_ply(input);
  ParseOutput o = parse_cloud(ply.cloud, cfg, fs::path(input).filename().string(), structure_map);
  emit(o.j, c, "parse.json", out);
  if (structure_map) {
    if (c.out.empty()) throw InvalidArgument("--structure-map needs --out DIR");
    std::ofstream obj(fs::path(c.out) / "structure.obj");
    write_obj(obj, o.meshes);
  }
  return o.clean ? kSuccess : kNumericalFailure;
}

// ---- eval -----------------------------------------------------------------

struct Labeled {
  std::vector<int> labels;
  std::vector<Quadric> quadrics;
  std::vector<QuadricType> types;
};

Labeled read_labeled(const fs::path& path) {
  Labeled l;
  if (path.extension() == ".ply") {
    fs::path sidecar = path;
    sidecar.replace_extension(".json");
    const dataset::DatasetItem item = dataset::read_item(path, sidecar);
    l.labels = item.labels;
    for (const auto& s : item.segments) {
      l.quadrics.push_back(s.quadric);
      l.types.push_back(s.type);
    }
    return l;
  }
  const json j = dataset::read_json(path);
  const std::string where = path.filename().string();
  const auto& labels = require(j, "labels", where);
  if (!labels.is_array()) throw SchemaError(where + ".labels: expected an array");
  for (const auto& v : labels) {
    if (!v.is_number_integer()) throw SchemaError(where + ".labels: expected integers");
    l.labels.push_back(v.get<int>());
  }
  const auto& segs = require(j, "segments", where);
  if (!segs.is_array()) throw SchemaError(where + ".segments: expected an array");
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const std::string w = where + ".segments[" + std::to_string(k) + "]";
    const auto& type = require(segs[k], "type", w);
    if (!type.is_string()) throw SchemaError(w + ".type: expected a string");
    l.types.push_back(QuadricType::from_name(type.get<std::string>()));
    if (segs[k].contains("coeffs")) {
      l.quadrics.push_back(quadric_from_json(segs[k], w));
    } else {
      // A failed segment still owns its points; any surface far away stands in.
      l.quadrics.push_back(Quadric::from_blocks(Mat3::Identity(), Vec3::Zero(), -1e-12));
    }
  }
  return l;
}

metrics::MetricReport evaluate_pair(const fs::path& pred_path, const fs::path& truth_ply,
                                    const ToolkitConfig& cfg) {
  fs::path sidecar = truth_ply;
  sidecar.replace_extension(".json");
  const dataset::DatasetItem truth = dataset::read_item(truth_ply, sidecar);
  const Labeled pred = read_labeled(pred_path);
  if (pred.labels.size() != truth.labels.size()) {
    throw SchemaError(pred_path.filename().string() + ": " + std::to_string(pred.labels.size()) +
                      " labels for " + std::to_string(truth.labels.size()) + " points");
  }
  const SegmentMembership pm(pred.labels, static_cast<int>(pred.quadrics.size()));
  const SegmentMembership tm(truth.labels, static_cast<int>(truth.segments.size()));
  const Assignment a = detect::match_segments(pm, tm);
  std::vector<QuadricType> ttypes;
  for (const auto& s : truth.segments) ttypes.push_back(s.type);
  metrics::EvaluationInput in;
  in.cloud = &truth.cloud.points;
  in.predicted = &pm;
  in.truth = &tm;
  in.fitted = &pred.quadrics;
  in.predicted_types = &pred.types;
  in.truth_types = &ttypes;
  in.assignment = &a;
  return metrics::evaluate(in, cfg.epsilons, cfg.residual_grouping);
}

int cmd_eval(const Common& c, const std::string& pred, const std::string& truth, bool as_json,
             std::ostream& out) {
  const ToolkitConfig cfg = effective_config(c);
  metrics::MetricReport report;
  json j;
  if (fs::is_directory(truth)) {
    dataset::DatasetReader reader(truth);
    std::vector<metrics::MetricReport> reports(reader.size());
    const auto& items = reader.manifest()["items"];
    parallel_for(reader.size(), c.threads, [&](std::size_t i) {
      const fs::path tp = fs::path(truth) / items[i]["points"].get<std::string>();
      // Parse output first; a same-named item PLY lets corpora be compared.
      fs::path pp = fs::path(pred) / (stem_of(tp) + ".parse.json");
      if (!fs::exists(pp) && fs::exists(fs::path(pred) / tp.filename())) pp = fs::path(pred) / tp.filename();
      reports[i] = evaluate_pair(pp, tp, cfg);
    });
    report = metrics::average(reports);
    j = metrics::to_json(report);
    j["objects"] = reports.size();
  } else {
    report = evaluate_pair(pred, truth, cfg);
    j = metrics::to_json(report);
  }
  j["config"] = to_json(cfg);
  if (!c.out.empty()) emit(j, c, "eval.json", out);
  if (as_json && c.out.empty()) {
    out << j.dump(2) << '\n';
  } else {
    out << metrics::render_table(report);
  }
  return kSuccess;
}

// ---- selfcheck ------------------------------------------------------------

Quadric random_quadric(dataset::Rng& rng) {
  Vec3 lam;
  for (int i = 0; i < 3; ++i) lam(i) = rng.uniform(0.5, 3.0) * (rng.uniform() < 0.3 ? -1 : 1);
  const Mat3 R = rotation_from_uniforms(rng.uniform(), rng.uniform(), rng.uniform());
  const Vec3 t(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  return compose(lam, rng.uniform(-2.0, -0.5), R, t);
}

int cmd_selfcheck(std::ostream& out) {
  dataset::Rng rng(20240607);
  int failures = 0;
  const auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    if (!ok) ++failures;
  };

  {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const Quadric q = random_quadric(rng);
      const Quadric n = normalize(q);
      worst = std::max(worst, (compose(decompose(q)).matrix() - n.matrix()).cwiseAbs().maxCoeff());
    }
    report("decompose-roundtrip", worst < 1e-9, "max error " + std::to_string(worst));
  }
  {
    bool ok = true;
    ok &= classify(decompose(compose(Vec3(1, 1, 1), -1, Mat3::Identity(), Vec3::Zero()))) ==
          QuadricType::sphere();
    ok &= classify(decompose(compose(Vec3(1, 1, 0), -1, Mat3::Identity(), Vec3::Zero()))) ==
          QuadricType::cylinder();
    ok &= classify(decompose(compose(Vec3(1, 1, -1), 0, Mat3::Identity(), Vec3::Zero()))) ==
          QuadricType::cone();
    ok &= classify(decompose(compose(Vec3(1, 0, 0), 0, Mat3::Identity(), Vec3::Zero()))) ==
          QuadricType::plane();
    report("canonical-types", ok, "sphere, cylinder, cone, plane");
  }
  {
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
      factor::ObserverPose r{rotation_from_uniforms(rng.uniform(), rng.uniform(), rng.uniform()),
                             Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))};
      const Quadric world = random_quadric(rng);
      const auto m = factor::QuadricMeasurement::from_quadric(factor::observe(world, r));
      factor::QuadricState q = factor::state_from_quadric(world);
      q = factor::retract(q, Eigen::Matrix<double, 9, 1>::Constant(0.05));
      const factor::Jacobian J = factor::jacobian(m, r, q);
      const double h = 1e-6;
      for (int col = 0; col < 15; ++col) {
        Eigen::Matrix<double, 6, 1> dr = Eigen::Matrix<double, 6, 1>::Zero();
        Eigen::Matrix<double, 9, 1> dq = Eigen::Matrix<double, 9, 1>::Zero();
        const auto eval = [&](double sgn) {
          if (col < 6) dr(col) = sgn * h; else dq(col - 6) = sgn * h;
          return factor::error(m, factor::retract(r, dr), factor::retract(q, dq)).stacked();
        };
        const Eigen::Matrix<double, 15, 1> fd = (eval(1) - eval(-1)) / (2 * h);
        worst = std::max(worst, (fd - J.col(col)).cwiseAbs().maxCoeff() /
                                    std::max(1.0, J.col(col).cwiseAbs().maxCoeff()));
      }
    }
    report("factor-jacobian", worst < 1e-5, "max relative error " + std::to_string(worst));
  }
  {
    bool ok = true;
    for (int t = 0; t < 50; ++t) {
      const int k = 1 + static_cast<int>(rng.integer(0, 4));
      Eigen::MatrixXd cost(k, k);
      for (int i = 0; i < k; ++i) for (int j = 0; j < k; ++j) cost(i, j) = rng.uniform();
      const auto match = detect::hungarian(cost);
      double got = 0.0;
      for (int i = 0; i < k; ++i) got += cost(i, match[static_cast<std::size_t>(i)]);
      std::vector<int> perm(static_cast<std::size_t>(k));
      std::iota(perm.begin(), perm.end(), 0);
      double best = std::numeric_limits<double>::infinity();
      do {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += cost(i, perm[static_cast<std::size_t>(i)]);
        best = std::min(best, s);
      } while (std::next_permutation(perm.begin(), perm.end()));
      ok &= std::abs(got - best) < 1e-12;
    }
    report("hungarian", ok, "50 random matrices vs exhaustive search");
  }
  {
    const Quadric sphere = compose(Vec3::Ones(), -1, Mat3::Identity(), Vec3::Zero());
    const double d = metrics::point_distance(sphere, Vec3(2, 0, 0));
    report("point-distance", std::abs(d - 1.0) < 1e-12, "unit sphere at (2,0,0): " +
                                                          std::to_string(d));
  }
  {
    dataset::GeneratorConfig g;
    g.seed = 7;
    const auto a = dataset::generate_item(g, 3);
    const auto b = dataset::generate_item(g, 3);
    report("generator-determinism", a.cloud.points == b.cloud.points && a.labels == b.labels,
           "seed 7 item 3 twice");
  }
  return failures == 0 ? kSuccess : kNumericalFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Log log(err);
  CLI::App app{"Quadric primitive parsing toolkit", "quadrics"};
  app.require_subcommand(1);
  Common common;
  std::uint64_t seed = 0;
  app.add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Seed for all randomness");
  app.add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", common.out, "Output directory");

  auto* gen = app.add_subcommand("generate", "Write a synthetic corpus");
  std::size_t objects = 0;
  auto* objects_opt = gen->add_option("--objects", objects, "Number of objects");

  auto* fit_cmd = app.add_subcommand("fit", "Fit one segment (PLY)");
  std::string fit_input, fit_type = "auto";
  fit_cmd->add_option("input", fit_input, "Segment PLY file")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--type", fit_type,
                      "auto, unconstrained, plane, sphere, cylinder or cone")
      ->check(CLI::IsMember({"auto", "unconstrained", "plane", "sphere", "cylinder", "cone"}));

  auto* parse_cmd = app.add_subcommand("parse", "Segment and fit a cloud or corpus");
  std::string parse_input;
  bool structure_map = false;
  parse_cmd->add_option("input", parse_input, "PLY file or corpus directory")
      ->required()
      ->check(CLI::ExistingPath);
  parse_cmd->add_flag("--structure-map", structure_map, "Also write OBJ structure maps");

  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  std::string pred, truth;
  bool as_json = false;
  eval_cmd->add_option("predictions", pred, "parse JSON, item PLY, or directory")
      ->required()
      ->check(CLI::ExistingPath);
  eval_cmd->add_option("truth", truth, "item PLY or corpus directory")
      ->required()
      ->check(CLI::ExistingPath);
  eval_cmd->add_flag("--json", as_json, "Print the report as JSON instead of a table");

  app.add_subcommand("selfcheck", "Run the built-in invariant checks");

  // Subcommand options may follow the global ones in any order.
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kInputError;
  }
  if (*seed_opt) common.seed = seed;

  try {
    if (gen->parsed()) {
      return cmd_generate(common, *objects_opt ? std::optional(objects) : std::nullopt, log);
    }
    if (fit_cmd->parsed()) return cmd_fit(common, fit_input, fit_type, out);
    if (parse_cmd->parsed()) return cmd_parse(common, parse_input, structure_map, out, log);
    if (eval_cmd->parsed()) return cmd_eval(common, pred, truth, as_json, out);
    return cmd_selfcheck(out);
  } catch (const SchemaError& e) {
    log(Level::Error, e.what());
    return kInputError;
  } catch (const InvalidArgument& e) {
    log(Level::Error, e.what());
    return kInputError;
  } catch (const DegenerateInput& e) {
    log(Level::Error, e.what());
    return kNumericalFailure;
  } catch (const std::exception& e) {
    log(Level::Error, e.what());
    return kInputError;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace quadrics::cli
