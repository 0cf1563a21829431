#include "support.hpp"

#include "quadrics/metrics/distance.hpp"
#include "quadrics/metrics/metrics.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace quadrics {
namespace {

using testing::random_rotation;
using testing::random_vector;

Quadric unit_sphere() { return compose(Vec3::Ones(), -1.0, Mat3::Identity(), Vec3::Zero()); }

Assignment identity_assignment(int k) {
  Assignment a;
  for (int i = 0; i < k; ++i) {
    a.predicted_to_truth.push_back(i);
    a.truth_to_predicted.push_back(i);
  }
  return a;
}

TEST(Distance, SphereAndPlaneExamples) {
  EXPECT_NEAR(metrics::point_distance(unit_sphere(), Vec3(2, 0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(metrics::point_distance(unit_sphere(), Vec3(0, 0.5, 0)), 0.5, 1e-12);
  Vec10 c = Vec10::Zero();
  c(2) = 1.0;
  const metrics::SurfaceDistance plane{Quadric(c)};
  EXPECT_NEAR(plane.distance(Vec3(0, 0, 0.5)), 0.5, 1e-12);
  EXPECT_NEAR(plane.distance(Vec3(3, -2, -0.25)), 0.25, 1e-12);
}

TEST(Distance, CylinderClosedForm) {
  dataset::Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const double r = rng.uniform(0.1, 1.0);
    const Mat3 R = random_rotation(rng);
    const Vec3 c = random_vector(rng);
    const metrics::SurfaceDistance d(compose(Vec3(1 / (r * r), 1 / (r * r), 0), -1.0, R, c));
    for (int i = 0; i < 20; ++i) {
      const Vec3 x = c + random_vector(rng, -2, 2);
      const Vec3 y = R.transpose() * (x - c);
      EXPECT_NEAR(d.distance(x), std::abs(y.head<2>().norm() - r), 1e-8);
    }
  }
}

TEST(Distance, EllipsoidAgainstDenseSampling) {
  const Vec3 s(1.0, 0.6, 0.3);
  const metrics::SurfaceDistance d(
      compose(s.cwiseInverse().cwiseAbs2(), -1.0, Mat3::Identity(), Vec3::Zero()));
  dataset::Rng rng(22);
  for (int t = 0; t < 10; ++t) {
    const Vec3 x = random_vector(rng, -1.3, 1.3);
    double best = std::numeric_limits<double>::infinity();
    const int n = 800;
    for (int i = 0; i <= n; ++i) {
      const double th = std::numbers::pi * i / n;
      for (int j = 0; j < 2 * n; ++j) {
        const double ph = std::numbers::pi * j / n;
        const Vec3 p(s(0) * std::sin(th) * std::cos(ph), s(1) * std::sin(th) * std::sin(ph),
                     s(2) * std::cos(th));
        best = std::min(best, (p - x).norm());
      }
    }
    EXPECT_NEAR(d.distance(x), best, 5e-3);
    EXPECT_LE(d.distance(x), best + 1e-9);
  }
}

TEST(Distance, ConeApexFallbackIsFlagged) {
  const metrics::SurfaceDistance d(compose(Vec3(1, 1, -1), 0.0, Mat3::Identity(), Vec3::Zero()));
  const auto r = d(Vec3::Zero());
  EXPECT_NEAR(r.distance, 0.0, 1e-9);
  // Point on the axis: the nearest generator is at 45 degrees.
  const auto axis = d(Vec3(0, 0, 1));
  EXPECT_NEAR(axis.distance, std::sqrt(0.5), 1e-6);
  EXPECT_TRUE(axis.approximate);
}

TEST(SegIou, Examples) {
  const SegmentMembership w({0, 0, 1, 1}, 2);
  EXPECT_DOUBLE_EQ(metrics::seg_iou(w, w, identity_assignment(2)), 1.0);

  Assignment swapped;
  swapped.predicted_to_truth = {1, 0};
  swapped.truth_to_predicted = {1, 0};
  EXPECT_DOUBLE_EQ(metrics::seg_iou(w, w, swapped), 0.0);

  // Equal-size segments overlapping in half their points.
  const SegmentMembership truth({0, 0, 0, 0, 1, 1, 1, 1, 2, 2}, 3);
  const SegmentMembership pred({2, 2, 0, 0, 0, 0, 1, 1, 2, 2}, 3);
  Assignment a;
  a.truth_to_predicted = {0, -1, -1};
  a.predicted_to_truth = {0, -1, -1};
  EXPECT_NEAR(metrics::seg_iou(pred, truth, a), (1.0 / 3.0) / 3.0, 1e-15);
}

TEST(TypeIou, Counting) {
  const std::vector<QuadricType> truth = {QuadricType(QuadricKind::Plane), QuadricType(QuadricKind::Sphere),
                                          QuadricType(QuadricKind::Cone), QuadricType(QuadricKind::Cylinder)};
  std::vector<QuadricType> pred = truth;
  EXPECT_DOUBLE_EQ(metrics::type_iou(pred, truth, identity_assignment(4)), 1.0);
  pred[2] = QuadricType(QuadricKind::Cylinder);
  EXPECT_DOUBLE_EQ(metrics::type_iou(pred, truth, identity_assignment(4)), 0.75);
  const std::vector<QuadricType> wrong(4, QuadricType(QuadricKind::Line));
  EXPECT_DOUBLE_EQ(metrics::type_iou(wrong, truth, identity_assignment(4)), 0.0);
}

Points sphere_points(dataset::Rng& rng, int n, double radius) {
  Points p(n, 3);
  for (int i = 0; i < n; ++i) p.row(i) = radius * random_vector(rng).normalized().transpose();
  return p;
}

TEST(Residual, UniformOffsetAndExact) {
  dataset::Rng rng(23);
  const SegmentMembership w(std::vector<int>(300, 0), 1);
  const Points off = sphere_points(rng, 300, 1.01);
  EXPECT_NEAR(metrics::residual(off, w, w, {unit_sphere()}, identity_assignment(1)), 0.01, 1e-12);
  const Points on = sphere_points(rng, 300, 1.0);
  EXPECT_LT(metrics::residual(on, w, w, {unit_sphere()}, identity_assignment(1)), 1e-9);
}

TEST(Residual, UnmatchedTruthIsSkipped) {
  dataset::Rng rng(24);
  Points cloud(20, 3);
  cloud.topRows(10) = sphere_points(rng, 10, 1.02);
  cloud.bottomRows(10) = sphere_points(rng, 10, 5.0);
  const SegmentMembership truth({0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1}, 2);
  const SegmentMembership pred(std::vector<int>(20, 0), 1);
  Assignment a;
  a.predicted_to_truth = {0};
  a.truth_to_predicted = {0, -1};
  EXPECT_NEAR(metrics::residual(cloud, truth, pred, {unit_sphere()}, a), 0.02, 1e-12);
}

TEST(PCoverage, Fractions) {
  Points cloud(4, 3);
  cloud << 1.005, 0, 0, 0, 1.015, 0, 0, 0, 1.5, 0, -0.999, 0;
  const auto cov = metrics::p_coverage(cloud, {unit_sphere()}, {0.01, 0.02, 1e-4, 1.0});
  EXPECT_DOUBLE_EQ(cov.at(0.01), 0.5);
  EXPECT_DOUBLE_EQ(cov.at(0.02), 0.75);
  EXPECT_DOUBLE_EQ(cov.at(1e-4), 0.0);
  EXPECT_DOUBLE_EQ(cov.at(1.0), 1.0);
}

TEST(Report, JsonRoundtripAndAverage) {
  metrics::MetricReport a;
  a.seg_iou = 0.8;
  a.type_iou = 1.0;
  a.residual = 0.01;
  a.p_coverage = {{0.01, 0.5}, {0.02, 0.9}};
  metrics::MetricReport b = a;
  b.seg_iou = 0.6;
  b.p_coverage[0.01] = 0.7;
  const metrics::MetricReport avg = metrics::average({a, b});
  EXPECT_DOUBLE_EQ(avg.seg_iou, 0.7);
  EXPECT_DOUBLE_EQ(avg.p_coverage.at(0.01), 0.6);
  const metrics::MetricReport back = metrics::report_from_json(metrics::to_json(avg));
  EXPECT_DOUBLE_EQ(back.seg_iou, avg.seg_iou);
  EXPECT_DOUBLE_EQ(back.p_coverage.at(0.02), 0.9);
  EXPECT_NE(metrics::render_table(avg).find("S-IoU"), std::string::npos);
}

}  // namespace
}  // namespace quadrics
