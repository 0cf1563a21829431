#include "quadrics/core/kdtree.hpp"
#include "quadrics/detect/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace quadrics::detect {

SegmentMembership extract_clusters(const Eigen::MatrixXd& shifted, double nms_radius,
                                   const ClusterOptions& options) {
  if (!(nms_radius > 0.0)) throw InvalidArgument("nms_radius must be positive");
  const Eigen::Index n = shifted.rows();
  if (n == 0) throw InvalidArgument("no points to cluster");
  const double h = options.density_bandwidth > 0.0 ? options.density_bandwidth : nms_radius;
  const double inv2h2 = 1.0 / (2.0 * h * h);

  const KdTree tree{KdTree::Matrix(shifted)};
  std::vector<double> density(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const auto& nb : tree.radius(shifted.row(i).transpose(), 4.0 * h)) {
      density[static_cast<std::size_t>(i)] += std::exp(-nb.squared_distance * inv2h2);
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return density[static_cast<std::size_t>(a)] > density[static_cast<std::size_t>(b)];
  });
  const double peak = density[static_cast<std::size_t>(order.front())];

  std::vector<Eigen::Index> centers;
  const double r2 = nms_radius * nms_radius;
  for (const Eigen::Index c : order) {
    if (!centers.empty() &&
        density[static_cast<std::size_t>(c)] < options.min_relative_density * peak) {
      break;
    }
    bool suppressed = false;
    for (const Eigen::Index a : centers) {
      if ((shifted.row(c) - shifted.row(a)).squaredNorm() <= r2) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) centers.push_back(c);
  }

  const auto assign = [&](const std::vector<Eigen::Index>& cs) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < cs.size(); ++k) {
        const double d = (shifted.row(i) - shifted.row(cs[k])).squaredNorm();
        if (d < best_d) best_d = d, best = static_cast<int>(k);
      }
      labels[static_cast<std::size_t>(i)] = best;
    }
    return labels;
  };

  std::vector<int> labels = assign(centers);
  // Dissolve undersized clusters, smallest first, until all are large enough.
  for (;;) {
    if (centers.size() <= 1) break;
    std::vector<int> sizes(centers.size(), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    const auto it = std::min_element(sizes.begin(), sizes.end());
    if (*it >= options.min_cluster_size) break;
    centers.erase(centers.begin() + (it - sizes.begin()));
    labels = assign(centers);
  }

  SegmentMembership m(std::move(labels), static_cast<int>(centers.size()));
  m.centers.resize(static_cast<Eigen::Index>(centers.size()), shifted.cols());
  for (std::size_t k = 0; k < centers.size(); ++k) {
    m.centers.row(static_cast<Eigen::Index>(k)) = shifted.row(centers[k]);
  }
  return m;
}

Segment extract_segment(const PointCloud& cloud, const SegmentMembership& membership, int k) {
  if (k < 0 || k >= membership.count) throw InvalidArgument("segment index out of range");
  if (membership.size() != cloud.size()) {
    throw InvalidArgument("membership and cloud sizes differ");
  }
  const auto rows = membership.members(k);
  if (rows.empty()) throw DegenerateInput("segment " + std::to_string(k) + " is empty");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Segment s;
  s.points.resize(n, 3);
  if (cloud.normals) s.normals = Points(n, 3);
  if (cloud.weights) s.weights = Eigen::VectorXd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = rows[static_cast<std::size_t>(i)];
    s.points.row(i) = cloud.points.row(r);
    if (cloud.normals) s.normals->row(i) = cloud.normals->row(r);
    if (cloud.weights) (*s.weights)(i) = (*cloud.weights)(r);
  }
  return s;
}

std::vector<QuadricType> vote_type(const std::vector<QuadricType>& point_types,
                                   const SegmentMembership& membership) {
  if (static_cast<Eigen::Index>(point_types.size()) != membership.size()) {
    throw InvalidArgument("one type label per point expected");
  }
  std::vector<QuadricType> out;
  for (int k = 0; k < membership.count; ++k) {
    const auto rows = membership.members(k);
    if (rows.empty()) throw InvalidArgument("segment " + std::to_string(k) + " is empty");
    std::vector<std::pair<QuadricType, int>> counts;
    for (const Eigen::Index r : rows) {
      const QuadricType& t = point_types[static_cast<std::size_t>(r)];
      auto it = std::find_if(counts.begin(), counts.end(),
                             [&](const auto& c) { return c.first == t; });
      if (it == counts.end()) {
        counts.emplace_back(t, 1);
      } else {
        ++it->second;
      }
    }
    const auto rank = [](const QuadricType& t) {
      return 16 * parsimony_rank(t.kind()) + static_cast<int>(t.kind());
    };
    const auto best = std::min_element(counts.begin(), counts.end(), [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return rank(a.first) < rank(b.first);
    });
    out.push_back(best->first);
  }
  return out;
}

}  // namespace quadrics::detect
