#include "quadrics/metrics/metrics.hpp"

#include "quadrics/core/serialize.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

namespace quadrics::metrics {
namespace {

double column_iou(const SegmentMembership& a, int ka, const SegmentMembership& b, int kb) {
  Eigen::Index inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const bool in_a = a.labels[i] == ka;
    const bool in_b = b.labels[i] == kb;
    inter += (in_a && in_b) ? 1 : 0;
    uni += (in_a || in_b) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void check_sizes(const SegmentMembership& predicted, const SegmentMembership& truth) {
  if (predicted.size() != truth.size()) {
    throw InvalidArgument("memberships cover different point counts");
  }
}

double mean_distance(const SurfaceDistance& surface, const Points& cloud,
                     const std::vector<Eigen::Index>& rows) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (Eigen::Index r : rows) sum += surface.distance(cloud.row(r).transpose());
  return sum / static_cast<double>(rows.size());
}

}  // namespace

double seg_iou(const SegmentMembership& predicted, const SegmentMembership& truth,
               const Assignment& assignment) {
  check_sizes(predicted, truth);
  if (truth.count == 0) return 0.0;
  double sum = 0.0;
  for (int k = 0; k < truth.count; ++k) {
    const int p = assignment.truth_to_predicted.at(static_cast<std::size_t>(k));
    if (p >= 0) sum += column_iou(predicted, p, truth, k);
  }
  return sum / truth.count;
}

double type_iou(const std::vector<QuadricType>& predicted, const std::vector<QuadricType>& truth,
                const Assignment& assignment) {
  if (truth.empty()) return 0.0;
  int correct = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const int p = assignment.truth_to_predicted.at(k);
    if (p >= 0 && predicted.at(static_cast<std::size_t>(p)) == truth[k]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double residual(const Points& cloud, const SegmentMembership& truth,
                const SegmentMembership& predicted, const std::vector<Quadric>& fitted,
                const Assignment& assignment, ResidualGrouping grouping) {
  double sum = 0.0;
  int used = 0;
  if (grouping == ResidualGrouping::GroundTruth) {
    for (int k = 0; k < truth.count; ++k) {
      const int p = assignment.truth_to_predicted.at(static_cast<std::size_t>(k));
      if (p < 0) continue;
      sum += mean_distance(SurfaceDistance(fitted.at(static_cast<std::size_t>(p))), cloud,
                           truth.members(k));
      ++used;
    }
  } else {
    for (int k = 0; k < predicted.count; ++k) {
      const auto rows = predicted.members(k);
      if (rows.empty()) continue;
      sum += mean_distance(SurfaceDistance(fitted.at(static_cast<std::size_t>(k))), cloud, rows);
      ++used;
    }
  }
  return used == 0 ? 0.0 : sum / used;
}

std::map<double, double> p_coverage(const Points& cloud, const std::vector<Quadric>& fitted,
                                    const std::vector<double>& epsilons) {
  std::map<double, double> out;
  for (double e : epsilons) out[e] = 0.0;
  if (cloud.rows() == 0 || fitted.empty()) return out;

  std::vector<SurfaceDistance> surfaces;
  surfaces.reserve(fitted.size());
  for (const auto& q : fitted) surfaces.emplace_back(q);

  std::map<double, Eigen::Index> hits;
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : surfaces) best = std::min(best, s.distance(cloud.row(i).transpose()));
    for (double e : epsilons) {
      if (best < e) ++hits[e];
    }
  }
  for (double e : epsilons) {
    out[e] = static_cast<double>(hits[e]) / static_cast<double>(cloud.rows());
  }
  return out;
}

MetricReport evaluate(const EvaluationInput& in, const std::vector<double>& epsilons,
                      ResidualGrouping grouping) {
  const auto& truth = *in.truth;
  const auto& predicted = *in.predicted;
  const auto& assignment = *in.assignment;
  check_sizes(predicted, truth);

  MetricReport r;
  r.truth_count = truth.count;
  r.predicted_count = predicted.count;
  r.seg_iou = seg_iou(predicted, truth, assignment);
  r.type_iou = type_iou(*in.predicted_types, *in.truth_types, assignment);
  r.residual = residual(*in.cloud, truth, predicted, *in.fitted, assignment, grouping);
  r.p_coverage = p_coverage(*in.cloud, *in.fitted, epsilons);

  for (int k = 0; k < truth.count; ++k) {
    SegmentReport s;
    s.truth_index = k;
    s.matched_prediction = assignment.truth_to_predicted.at(static_cast<std::size_t>(k));
    const auto rows = truth.members(k);
    s.point_count = static_cast<Eigen::Index>(rows.size());
    if (s.matched_prediction >= 0) {
      const auto p = static_cast<std::size_t>(s.matched_prediction);
      s.iou = column_iou(predicted, s.matched_prediction, truth, k);
      s.type_correct = in.predicted_types->at(p) == in.truth_types->at(static_cast<std::size_t>(k));
      s.residual = mean_distance(SurfaceDistance(in.fitted->at(p)), *in.cloud, rows);
    }
    r.segments.push_back(s);
  }
  return r;
}

MetricReport average(const std::vector<MetricReport>& reports) {
  MetricReport out;
  if (reports.empty()) return out;
  const double n = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    out.seg_iou += r.seg_iou / n;
    out.type_iou += r.type_iou / n;
    out.residual += r.residual / n;
    for (const auto& [eps, v] : r.p_coverage) out.p_coverage[eps] += v / n;
    out.truth_count += r.truth_count;
    out.predicted_count += r.predicted_count;
  }
  return out;
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j;
  j["seg_iou"] = r.seg_iou;
  j["type_iou"] = r.type_iou;
  j["residual"] = r.residual;
  nlohmann::json cov = nlohmann::json::array();
  for (const auto& [eps, v] : r.p_coverage) cov.push_back({{"epsilon", eps}, {"fraction", v}});
  j["p_coverage"] = cov;
  j["predicted_count"] = r.predicted_count;
  j["truth_count"] = r.truth_count;
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : r.segments) {
    segs.push_back({{"truth_index", s.truth_index},
                    {"matched_prediction", s.matched_prediction},
                    {"iou", s.iou},
                    {"type_correct", s.type_correct},
                    {"residual", s.residual},
                    {"point_count", s.point_count}});
  }
  j["segments"] = segs;
  return j;
}

MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport r;
  r.seg_iou = require(j, "seg_iou", "report").get<double>();
  r.type_iou = require(j, "type_iou", "report").get<double>();
  r.residual = require(j, "residual", "report").get<double>();
  for (const auto& c : require(j, "p_coverage", "report")) {
    r.p_coverage[require(c, "epsilon", "report.p_coverage").get<double>()] =
        require(c, "fraction", "report.p_coverage").get<double>();
  }
  r.predicted_count = j.value("predicted_count", 0);
  r.truth_count = j.value("truth_count", 0);
  return r;
}

std::string render_table(const MetricReport& r, const std::string& label) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %8s %8s %10s", "Method", "S-IoU", "T-IoU", "Res");
  os << buf;
  for (const auto& [eps, v] : r.p_coverage) {
    std::snprintf(buf, sizeof buf, " %12s", ("P-cov@" + std::to_string(eps).substr(0, 4)).c_str());
    os << buf;
  }
  os << '\n';
  std::snprintf(buf, sizeof buf, "%-12s %8.2f %8.2f %10.3e", label.c_str(), 100.0 * r.seg_iou,
                100.0 * r.type_iou, r.residual);
  os << buf;
  for (const auto& [eps, v] : r.p_coverage) {
    std::snprintf(buf, sizeof buf, " %12.2f", 100.0 * v);
    os << buf;
  }
  os << '\n';
  return os.str();
}

}  // namespace quadrics::metrics
