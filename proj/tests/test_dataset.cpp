#include "support.hpp"

#include "quadrics/core/membership.hpp"
#include "quadrics/dataset/generator.hpp"
#include "quadrics/dataset/io.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace quadrics {
namespace {

namespace fs = std::filesystem;

dataset::GeneratorConfig small_config() {
  dataset::GeneratorConfig c;
  c.points_per_segment = 256;
  c.min_segments = 2;
  c.max_segments = 4;
  return c;
}

TEST(Rng, SplitMix64ReferenceVectors) {
  dataset::Rng rng(0);
  EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rng.next(), 0x06c45d188009454fULL);
  dataset::Rng u(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    const auto k = u.integer(-2, 3);
    ASSERT_GE(k, -2);
    ASSERT_LE(k, 3);
  }
}

TEST(Generator, NoiseFreePointsLieOnTheSurface) {
  dataset::GeneratorConfig c = small_config();
  c.noise_amplitude = 0.0;
  dataset::Rng rng(81);
  for (const auto& t : primitive_types()) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto g = dataset::generate_segment(t, c, rng);
      EXPECT_EQ(g.truth.type, t);
      EXPECT_EQ(g.segment.points, g.clean);
      for (Eigen::Index i = 0; i < g.clean.rows(); ++i) {
        ASSERT_LT(std::abs(g.truth.quadric.evaluate(g.clean.row(i).transpose())), 1e-10) << t.name();
        ASSERT_NEAR(g.segment.normals->row(i).norm(), 1.0, 1e-12);
      }
    }
  }
}

TEST(Generator, SphereRadiusWithinNoise) {
  dataset::GeneratorConfig c = small_config();
  c.sphere_radius = {0.3, 0.3};
  c.noise_amplitude = 0.01;
  dataset::Rng rng(82);
  const auto g = dataset::generate_segment(QuadricType(QuadricKind::Sphere), c, rng);
  const Vec3 center = g.truth.decomposition.translation;
  for (Eigen::Index i = 0; i < g.segment.size(); ++i) {
    const double r = (g.segment.points.row(i).transpose() - center).norm();
    EXPECT_LE(std::abs(r - 0.3), 0.01 + 1e-12);
  }
}

TEST(Generator, FixedSeedIsDeterministic) {
  const auto a = dataset::generate_item(small_config(), 5);
  const auto b = dataset::generate_item(small_config(), 5);
  EXPECT_EQ(a.cloud.points, b.cloud.points);
  EXPECT_EQ(*a.cloud.normals, *b.cloud.normals);
  EXPECT_EQ(a.labels, b.labels);
  const auto c = dataset::generate_item(small_config(), 6);
  EXPECT_FALSE(a.cloud.points.rows() == c.cloud.points.rows() && a.cloud.points == c.cloud.points);
}

TEST(Generator, SingleSegmentObjectWrapsGenerateSegment) {
  dataset::GeneratorConfig c = small_config();
  c.min_segments = c.max_segments = 1;
  c.type_mix = {0.0, 0.0, 1.0, 0.0};
  dataset::Rng r1(83), r2(83);
  const auto obj = dataset::generate_object(c, r1);
  const auto seg = dataset::generate_segment(QuadricType(QuadricKind::Cylinder), c, r2);
  EXPECT_EQ(obj.cloud.points, seg.segment.points);
  EXPECT_EQ(obj.segments.size(), 1u);
  EXPECT_EQ(obj.segments[0].quadric.coeffs(), seg.truth.quadric.coeffs());
  EXPECT_EQ(obj.labels, std::vector<int>(static_cast<std::size_t>(seg.segment.size()), 0));
}

TEST(Generator, SegmentCountsMatchMembershipColumns) {
  dataset::GeneratorConfig c = small_config();
  c.min_segments = c.max_segments = 4;
  c.trim_probability = 0.0;
  dataset::Rng rng(84);
  const auto obj = dataset::generate_object(c, rng);
  const SegmentMembership w(obj.labels, 4);
  const auto sizes = w.column_sizes();
  ASSERT_EQ(sizes.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(sizes[k], c.points_per_segment);
    EXPECT_EQ(obj.segments[k].point_count, sizes[k]);
  }
}

TEST(Generator, RejectsBadConfig) {
  dataset::GeneratorConfig c;
  c.min_segments = 5;
  c.max_segments = 2;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_THROW((void)dataset::generator_config_from_json({{"bogus", 1}}), SchemaError);
  const auto back = dataset::generator_config_from_json(dataset::to_json(small_config()));
  EXPECT_EQ(dataset::to_json(back), dataset::to_json(small_config()));
}

TEST(Ply, BinaryRoundtripIsExact) {
  const fs::path dir = testing::temp_dir("ply_binary");
  const auto obj = dataset::generate_item(small_config(), 1);
  dataset::write_ply(dir / "a.ply", obj.cloud, &obj.labels, dataset::Precision::Float64);
  const dataset::PlyCloud back = dataset::read_ply(dir / "a.ply");
  EXPECT_EQ(back.cloud.points, obj.cloud.points);
  EXPECT_EQ(*back.cloud.normals, *obj.cloud.normals);
  EXPECT_EQ(*back.segment_ids, obj.labels);

  // Float32 storage equals the item conversion.
  const dataset::DatasetItem item = dataset::to_item(obj);
  dataset::write_ply(dir / "b.ply", obj.cloud, &obj.labels);
  EXPECT_EQ(dataset::read_ply(dir / "b.ply").cloud.points, item.cloud.points);
}

TEST(Ply, ReadsAscii) {
  const fs::path dir = testing::temp_dir("ply_ascii");
  std::ofstream(dir / "a.ply") << "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\n"
                                  "property float x\nproperty float y\nproperty float z\n"
                                  "property int segment_id\nend_header\n"
                                  "0.5 1 -2 3\n1e-3 0 0 0\n";
  const dataset::PlyCloud p = dataset::read_ply(dir / "a.ply");
  ASSERT_EQ(p.cloud.size(), 2);
  EXPECT_EQ(p.cloud.points.row(0), Eigen::RowVector3d(0.5, 1, -2));
  EXPECT_FALSE(p.cloud.has_normals());
  EXPECT_EQ(*p.segment_ids, (std::vector<int>{3, 0}));
}

TEST(Ply, TruncatedFilesAreSchemaErrors) {
  const fs::path dir = testing::temp_dir("ply_truncated");
  const auto obj = dataset::generate_item(small_config(), 2);
  dataset::write_ply(dir / "a.ply", obj.cloud, &obj.labels);
  const std::string bytes = testing::read_bytes(dir / "a.ply");
  std::ofstream(dir / "short.ply", std::ios::binary) << bytes.substr(0, bytes.size() - 7);
  EXPECT_THROW((void)dataset::read_ply(dir / "short.ply"), SchemaError);
  std::ofstream(dir / "header.ply", std::ios::binary) << "ply\nformat binary_little_endian 1.0\nelement vertex 3\n";
  EXPECT_THROW((void)dataset::read_ply(dir / "header.ply"), SchemaError);
  std::ofstream(dir / "ascii.ply") << "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\n"
                                      "property float y\nproperty float z\nend_header\n1 2 3\n4 5\n";
  try {
    (void)dataset::read_ply(dir / "ascii.ply");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("vertex"), std::string::npos) << e.what();
  }
}

TEST(TruthJson, RoundtripAndMissingField) {
  const auto obj = dataset::generate_item(small_config(), 3);
  const nlohmann::json j = dataset::truth_to_json(obj.segments);
  const auto back = dataset::truth_from_json(nlohmann::json::parse(j.dump()), "truth");
  ASSERT_EQ(back.size(), obj.segments.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    EXPECT_EQ(back[k].quadric.coeffs(), obj.segments[k].quadric.coeffs());
    EXPECT_EQ(back[k].type, obj.segments[k].type);
    EXPECT_EQ(back[k].point_count, obj.segments[k].point_count);
  }
  nlohmann::json broken = j;
  broken["segments"][0].erase("point_count");
  try {
    (void)dataset::truth_from_json(broken, "truth");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("point_count"), std::string::npos) << e.what();
  }
}

TEST(Corpus, StreamingReaderMatchesGenerator) {
  const fs::path dir = testing::temp_dir("corpus_stream");
  const dataset::GeneratorConfig c = small_config();
  dataset::generate_dataset(dir, c, 4, {{"note", "test"}}, 2);
  dataset::DatasetReader reader(dir);
  ASSERT_EQ(reader.size(), 4u);
  EXPECT_EQ(reader.manifest().at("note"), "test");
  std::size_t i = 0;
  while (auto item = reader.next()) {
    const dataset::DatasetItem want = dataset::to_item(dataset::generate_item(c, i));
    EXPECT_EQ(item->cloud.points, want.cloud.points);
    EXPECT_EQ(item->labels, want.labels);
    EXPECT_EQ(item->segments.size(), want.segments.size());
    ++i;
  }
  EXPECT_EQ(i, 4u);
  EXPECT_EQ(dataset::read_dataset(dir).size(), 4u);

  // Same corpus from a second run and a different thread count.
  const fs::path again = testing::temp_dir("corpus_stream_again");
  dataset::generate_dataset(again, c, 4, {{"note", "test"}}, 1);
  EXPECT_EQ(testing::hash_directory(dir), testing::hash_directory(again));
}

}  // namespace
}  // namespace quadrics
