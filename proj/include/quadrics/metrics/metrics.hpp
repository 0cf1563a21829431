#pragma once

#include "quadrics/core/decomposition.hpp"
#include "quadrics/core/membership.hpp"
#include "quadrics/metrics/distance.hpp"

#include <json.hpp>

#include <map>
#include <vector>

namespace quadrics::metrics {

/// Mean over GT segments of IoU(W_hat[:, match(k)], W[:, k]); unmatched GT
/// segments contribute 0. Averages over K (the GT count).
double seg_iou(const SegmentMembership& predicted, const SegmentMembership& truth,
               const Assignment& assignment);

/// Fraction of GT segments whose matched prediction carries the same type.
double type_iou(const std::vector<QuadricType>& predicted,
                const std::vector<QuadricType>& truth, const Assignment& assignment);

enum class ResidualGrouping {
  /// Points grouped by GT segment, measured against the matched prediction.
  GroundTruth,
  /// Points grouped by predicted segment, measured against its own quadric.
  Predicted,
};

/// Mean over segments of the mean point-to-surface distance. With GT grouping
/// unmatched GT segments are skipped (they have no predicted surface).
double residual(const Points& cloud, const SegmentMembership& truth,
                const SegmentMembership& predicted, const std::vector<Quadric>& fitted,
                const Assignment& assignment,
                ResidualGrouping grouping = ResidualGrouping::GroundTruth);

/// Fraction of points whose nearest fitted surface is closer than each eps.
std::map<double, double> p_coverage(const Points& cloud, const std::vector<Quadric>& fitted,
                                    const std::vector<double>& epsilons = {0.01, 0.02});

struct SegmentReport {
  int truth_index = 0;
  int matched_prediction = -1;
  double iou = 0.0;
  bool type_correct = false;
  double residual = 0.0;
  Eigen::Index point_count = 0;
};

struct MetricReport {
  double seg_iou = 0.0;
  double type_iou = 0.0;
  double residual = 0.0;
  std::map<double, double> p_coverage;
  std::vector<SegmentReport> segments;
  int predicted_count = 0;
  int truth_count = 0;
};

struct EvaluationInput {
  const Points* cloud = nullptr;
  const SegmentMembership* predicted = nullptr;
  const SegmentMembership* truth = nullptr;
  const std::vector<Quadric>* fitted = nullptr;
  const std::vector<QuadricType>* predicted_types = nullptr;
  const std::vector<QuadricType>* truth_types = nullptr;
  const Assignment* assignment = nullptr;
};

MetricReport evaluate(const EvaluationInput& in, const std::vector<double>& epsilons = {0.01, 0.02},
                      ResidualGrouping grouping = ResidualGrouping::GroundTruth);

/// Mean of each field over several objects; p_coverage is point-weighted
/// per object like the others (plain mean of object values).
MetricReport average(const std::vector<MetricReport>& reports);

nlohmann::json to_json(const MetricReport& r);
MetricReport report_from_json(const nlohmann::json& j);

/// Fixed-width table: S-IoU, T-IoU, Res, P-cov@eps columns.
std::string render_table(const MetricReport& r, const std::string& label = "ours");

}  // namespace quadrics::metrics
