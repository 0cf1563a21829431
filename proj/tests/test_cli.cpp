#include "support.hpp"

#include "quadrics/cli/app.hpp"
#include "quadrics/cli/config.hpp"
#include "quadrics/dataset/io.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace quadrics {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  const fs::path p = dir / "config.json";
  dataset::write_json(p, j);
  return p;
}

const nlohmann::json kSmallCorpus = {
    {"generator", {{"points_per_segment", 256}, {"segments_per_object", {2, 3}}}}};

TEST(Cli, GenerateIsByteIdentical) {
  const fs::path dir = testing::temp_dir("cli_generate");
  const std::string cfg = write_config(dir, kSmallCorpus).string();
  for (const char* name : {"a", "b"}) {
    const Outcome r = run({"--config", cfg, "--seed", "99", "--out", (dir / name).string(), "generate", "--objects", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(testing::hash_directory(dir / "a"), testing::hash_directory(dir / "b"));
  EXPECT_TRUE(fs::exists(dir / "a" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "a" / "object_00002.ply"));
  EXPECT_NE(run({"generate"}).code, 0);
}

TEST(Cli, FitSphere) {
  const fs::path dir = testing::temp_dir("cli_fit");
  dataset::Rng rng(91);
  PointCloud c;
  c.points.resize(400, 3);
  for (int i = 0; i < 400; ++i) c.points.row(i) = (Vec3(0.1, 0.2, 0.3) + 0.5 * testing::random_vector(rng).normalized()).transpose();
  dataset::write_ply(dir / "sphere.ply", c, nullptr, dataset::Precision::Float64);
  const Outcome r = run({"fit", (dir / "sphere.ply").string(), "--type", "sphere"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("type"), "sphere");
  EXPECT_LT(j.at("residual").get<double>(), 1e-9);
  EXPECT_NE(run({"fit", (dir / "sphere.ply").string(), "--type", "torus"}).code, 0);
}

TEST(Cli, ParseSinglePlane) {
  const fs::path dir = testing::temp_dir("cli_parse");
  dataset::Rng rng(92);
  PointCloud c;
  c.points.resize(1200, 3);
  for (int i = 0; i < 1200; ++i) c.points.row(i) << rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.003, 0.003);
  dataset::write_ply(dir / "plane.ply", c);
  const Outcome r = run({"--out", (dir / "out").string(), "parse", (dir / "plane.ply").string(), "--structure-map"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = dataset::read_json(dir / "out" / "parse.json");
  ASSERT_EQ(j.at("segments").size(), 1u);
  EXPECT_EQ(j.at("segments")[0].at("type"), "plane");
  EXPECT_EQ(j.at("labels").size(), 1200u);
  EXPECT_GT(fs::file_size(dir / "out" / "structure.obj"), 0u);
}

TEST(Cli, EvalTruthAgainstItself) {
  const fs::path dir = testing::temp_dir("cli_eval");
  nlohmann::json cfg = kSmallCorpus;
  cfg["generator"]["noise_amplitude"] = 0.0;
  cfg["generator"]["point_precision"] = "float64";
  const std::string path = write_config(dir, cfg).string();
  ASSERT_EQ(run({"--config", path, "--out", (dir / "corpus").string(), "generate", "--objects", "2"}).code, 0);
  const Outcome r = run({"--config", path, "eval", (dir / "corpus").string(), (dir / "corpus").string(), "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(r.out);
  EXPECT_DOUBLE_EQ(report.at("seg_iou").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(report.at("type_iou").get<double>(), 1.0);
  EXPECT_LT(report.at("residual").get<double>(), 1e-9);

  const Outcome table = run({"eval", (dir / "corpus" / "object_00000.ply").string(),
                         (dir / "corpus" / "object_00000.ply").string()});
  ASSERT_EQ(table.code, 0) << table.err;
  EXPECT_NE(table.out.find("S-IoU"), std::string::npos);
}

TEST(Cli, BadInputExitsWithInputError) {
  const fs::path dir = testing::temp_dir("cli_bad");
  std::ofstream(dir / "junk.ply") << "not a ply file\n";
  EXPECT_EQ(run({"fit", (dir / "junk.ply").string()}).code, cli::kInputError);
  EXPECT_EQ(run({"parse", (dir / "junk.ply").string()}).code, cli::kInputError);
  std::ofstream(dir / "bad.json") << "{\"generator\": {\"no_such_key\": 1}}";
  const Outcome r = run({"--config", (dir / "bad.json").string(), "--out", (dir / "x").string(), "generate"});
  EXPECT_EQ(r.code, cli::kInputError);
  EXPECT_NE(r.err.find("no_such_key"), std::string::npos) << r.err;
}

TEST(Cli, SelfcheckPasses) {
  const Outcome r = run({"selfcheck"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

TEST(Config, RoundtripAndUnknownKeys) {
  const cli::ToolkitConfig c = cli::config_from_json(kSmallCorpus);
  EXPECT_EQ(c.generator.points_per_segment, 256);
  const cli::ToolkitConfig back = cli::config_from_json(cli::to_json(c));
  EXPECT_EQ(cli::to_json(back), cli::to_json(c));
  EXPECT_THROW((void)cli::config_from_json({{"detect", {{"bandwdth", 1.0}}}}), SchemaError);
}

}  // namespace
}  // namespace quadrics
