#include "quadrics/core/kdtree.hpp"
#include "quadrics/detect/detect.hpp"
#include "quadrics/metrics/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>

namespace quadrics::detect {
namespace {

using Rows = std::vector<Eigen::Index>;

std::vector<Eigen::Index> lexicographic_order(const PointCloud& c) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(c.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto key = [&](Eigen::Index i) {
    std::array<double, 6> k{c.points(i, 0), c.points(i, 1), c.points(i, 2), 0, 0, 0};
    if (c.normals) {
      for (int d = 0; d < 3; ++d) k[static_cast<std::size_t>(3 + d)] = (*c.normals)(i, d);
    }
    return k;
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return key(a) < key(b); });
  return order;
}

PointCloud permuted(const PointCloud& c, const std::vector<Eigen::Index>& order) {
  const auto n = static_cast<Eigen::Index>(order.size());
  PointCloud out;
  out.points.resize(n, 3);
  if (c.normals) out.normals = Points(n, 3);
  if (c.weights) out.weights = Eigen::VectorXd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = order[static_cast<std::size_t>(i)];
    out.points.row(i) = c.points.row(r);
    if (c.normals) out.normals->row(i) = c.normals->row(r);
    if (c.weights) (*out.weights)(i) = (*c.weights)(r);
  }
  return out;
}

Segment gather(const PointCloud& c, const Rows& rows, int limit) {
  Rows pick = rows;
  if (limit > 0 && static_cast<int>(rows.size()) > limit) {
    pick.clear();
    for (int i = 0; i < limit; ++i) {
      pick.push_back(rows[static_cast<std::size_t>(i) * rows.size() / static_cast<std::size_t>(limit)]);
    }
  }
  const auto n = static_cast<Eigen::Index>(pick.size());
  Segment s;
  s.points.resize(n, 3);
  if (c.normals) s.normals = Points(n, 3);
  if (c.weights) s.weights = Eigen::VectorXd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = pick[static_cast<std::size_t>(i)];
    s.points.row(i) = c.points.row(r);
    if (c.normals) s.normals->row(i) = c.normals->row(r);
    if (c.weights) (*s.weights)(i) = (*c.weights)(r);
  }
  return s;
}

struct UnionFind {
  std::vector<Eigen::Index> parent;
  explicit UnionFind(Eigen::Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  }
  Eigen::Index find(Eigen::Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(Eigen::Index a, Eigen::Index b) {
    a = find(a), b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

// Relabels to 0..K-1 in order of first appearance.
int compact(std::vector<int>& labels) {
  std::map<int, int> remap;
  for (int& l : labels) {
    auto it = remap.find(l);
    if (it == remap.end()) it = remap.emplace(l, static_cast<int>(remap.size())).first;
    l = it->second;
  }
  return static_cast<int>(remap.size());
}

// Splits labels into spatially connected components of the kNN graph and
// folds components smaller than `min_size` into their most connected neighbor.
int connected_relabel(std::vector<int>& labels, const std::vector<Rows>& graph,
                      Eigen::Index min_size) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  UnionFind uf(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const Eigen::Index j : graph[static_cast<std::size_t>(i)]) {
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) uf.unite(i, j);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(uf.find(i));
  int k = compact(labels);

  for (;;) {
    std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    // Smallest undersized component that touches another one.
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return sizes[static_cast<std::size_t>(a)] < sizes[static_cast<std::size_t>(b)]; });
    bool changed = false;
    for (const int c : order) {
      if (sizes[static_cast<std::size_t>(c)] >= min_size || k <= 1) break;
      std::map<int, int> touch;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] != c) continue;
        for (const Eigen::Index j : graph[static_cast<std::size_t>(i)]) {
          const int l = labels[static_cast<std::size_t>(j)];
          if (l != c) ++touch[l];
        }
      }
      if (touch.empty()) continue;
      const auto best = std::max_element(touch.begin(), touch.end(), [](const auto& a, const auto& b) {
        return a.second < b.second;
      });
      for (int& l : labels) {
        if (l == c) l = best->first;
      }
      k = compact(labels);
      changed = true;
      break;
    }
    if (!changed) break;
  }
  return k;
}

struct Part {
  Rows rows;
  double residual = std::numeric_limits<double>::infinity();
  bool alive = true;
};

double sample_residual(const PointCloud& c, const Rows& rows, const ParseConfig& cfg) {
  try {
    const Segment s = gather(c, rows, cfg.merge_sample);
    if (s.size() < 10) return std::numeric_limits<double>::infinity();
    return fit::fit_auto(s, cfg.candidate_types, cfg.fit).residual;
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

Rows merged_rows(const Rows& a, const Rows& b) {
  Rows out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

double weighted(const Part& a, const Part& b) {
  const auto na = static_cast<double>(a.rows.size()), nb = static_cast<double>(b.rows.size());
  if (!std::isfinite(a.residual) || !std::isfinite(b.residual)) {
    return std::numeric_limits<double>::infinity();
  }
  return (na * a.residual + nb * b.residual) / (na + nb);
}

std::vector<int> merge_parts(const PointCloud& c, std::vector<int> labels, int k,
                             const std::vector<Rows>& graph, const ParseConfig& cfg) {
  std::vector<Part> parts(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    parts[static_cast<std::size_t>(labels[i])].rows.push_back(static_cast<Eigen::Index>(i));
  }
  for (auto& p : parts) p.residual = sample_residual(c, p.rows, cfg);

  // Edge counts between parts of the kNN graph.
  std::map<std::pair<int, int>, int> edges;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (const Eigen::Index j : graph[i]) {
      const int a = labels[i], b = labels[static_cast<std::size_t>(j)];
      if (a < b) ++edges[{a, b}];
      if (b < a) ++edges[{b, a}];
    }
  }
  std::map<std::pair<int, int>, double> union_residual;
  const auto pair_residual = [&](int a, int b) {
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = union_residual.find(key);
    if (it == union_residual.end()) {
      const Rows rows = merged_rows(parts[static_cast<std::size_t>(a)].rows,
                                    parts[static_cast<std::size_t>(b)].rows);
      it = union_residual.emplace(key, sample_residual(c, rows, cfg)).first;
    }
    return it->second;
  };

  for (;;) {
    double best_gain = std::numeric_limits<double>::infinity();
    std::pair<int, int> best{-1, -1};
    double best_union = 0.0;
    for (const auto& [key, count] : edges) {
      (void)count;
      const auto& pa = parts[static_cast<std::size_t>(key.first)];
      const auto& pb = parts[static_cast<std::size_t>(key.second)];
      const double ru = pair_residual(key.first, key.second);
      if (!std::isfinite(ru)) continue;
      const double w = weighted(pa, pb);
      if (!(ru <= cfg.merge_factor * w + cfg.merge_tolerance)) continue;
      const double gain = std::isfinite(w) ? ru - w : -std::numeric_limits<double>::max();
      if (gain < best_gain) best_gain = gain, best = key, best_union = ru;
    }
    if (best.first < 0) break;
    const int a = best.first, b = best.second;
    auto& pa = parts[static_cast<std::size_t>(a)];
    auto& pb = parts[static_cast<std::size_t>(b)];
    pa.rows = merged_rows(pa.rows, pb.rows);
    pa.residual = best_union;
    pb.alive = false;
    pb.rows.clear();
    // Re-key edges of b onto a and drop cached unions touching either.
    std::map<std::pair<int, int>, int> next;
    for (const auto& [key, count] : edges) {
      int x = key.first == b ? a : key.first;
      int y = key.second == b ? a : key.second;
      if (x == y) continue;
      next[{std::min(x, y), std::max(x, y)}] += count;
    }
    edges = std::move(next);
    for (auto it = union_residual.begin(); it != union_residual.end();) {
      const auto& key = it->first;
      if (key.first == a || key.second == a || key.first == b || key.second == b) {
        it = union_residual.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (std::size_t p = 0; p < parts.size(); ++p) {
    for (const Eigen::Index r : parts[p].rows) labels[static_cast<std::size_t>(r)] = static_cast<int>(p);
  }
  compact(labels);
  return labels;
}

struct Box {
  Vec3 lo, hi;
  [[nodiscard]] bool contains(const Vec3& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
};

Box padded_box(const Points& pts, double pad_fraction, double pad_min) {
  const Vec3 lo = pts.colwise().minCoeff().transpose();
  const Vec3 hi = pts.colwise().maxCoeff().transpose();
  const double pad = std::max(pad_fraction * (hi - lo).norm(), pad_min);
  return {lo.array() - pad, hi.array() + pad};
}

}  // namespace

ParseResult parse(const PointCloud& input, const ParseConfig& cfg) {
  const Eigen::Index n = input.size();
  if (n < 50) throw InvalidArgument("parse needs at least 50 points");
  if (!input.points.allFinite()) throw InvalidArgument("cloud has non-finite points");
  if (cfg.candidate_types.empty()) throw InvalidArgument("no candidate types");

  const auto order = lexicographic_order(input);
  const PointCloud cloud = permuted(input, order);

  const PointFeatures features = compute_features(cloud, cfg.k_neighbors, cfg.feature_weights);

  // Mean shift on an evenly spaced subset.
  const Eigen::Index m = std::min<Eigen::Index>(n, std::max(cfg.max_shift_points, 1));
  std::vector<Eigen::Index> sample(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) sample[static_cast<std::size_t>(i)] = i * n / m;
  Eigen::MatrixXd Zs(m, features.Z.cols());
  for (Eigen::Index i = 0; i < m; ++i) Zs.row(i) = features.Z.row(sample[static_cast<std::size_t>(i)]);
  MeanShiftOptions ms;
  ms.max_iters = cfg.max_shift_iters;
  ms.tolerance = cfg.shift_tolerance;
  const MeanShiftResult shifted = mean_shift(Zs, cfg.bandwidth, ms);
  ClusterOptions co;
  co.min_relative_density = cfg.min_relative_density;
  co.min_cluster_size =
      std::max(1, static_cast<int>(std::ceil(cfg.min_cluster_fraction * static_cast<double>(m))));
  const SegmentMembership clusters = extract_clusters(shifted.Z, cfg.nms_radius, co);

  std::vector<int> labels(static_cast<std::size_t>(n));
  {
    const KdTree ztree{KdTree::Matrix(Zs)};
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto nb = ztree.knn(features.Z.row(i).transpose(), 1);
      labels[static_cast<std::size_t>(i)] = clusters.labels[static_cast<std::size_t>(nb.front().index)];
    }
  }

  std::vector<Rows> graph(static_cast<std::size_t>(n));
  {
    const KdTree ptree{KdTree::Matrix(cloud.points)};
    for (Eigen::Index i = 0; i < n; ++i) {
      for (const auto& nb : ptree.knn(cloud.points.row(i).transpose(), cfg.k_neighbors + 1)) {
        if (nb.index != i) graph[static_cast<std::size_t>(i)].push_back(nb.index);
      }
    }
  }
  const auto min_size = static_cast<Eigen::Index>(
      std::max(10.0, std::ceil(cfg.min_cluster_fraction * static_cast<double>(n))));
  const int k0 = connected_relabel(labels, graph, min_size);

  ParseResult result;
  result.initial_segments = k0;
  labels = merge_parts(cloud, labels, k0, graph, cfg);
  int k = compact(labels);

  // First full fit of every segment.
  const auto fit_all = [&](const std::vector<int>& lab, int count) {
    std::vector<std::optional<fit::FitResult>> fits(static_cast<std::size_t>(count));
    std::vector<Rows> rows(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < lab.size(); ++i) rows[static_cast<std::size_t>(lab[i])].push_back(static_cast<Eigen::Index>(i));
    for (int s = 0; s < count; ++s) {
      try {
        fits[static_cast<std::size_t>(s)] =
            fit::fit_auto(gather(cloud, rows[static_cast<std::size_t>(s)], 0), cfg.candidate_types, cfg.fit);
      } catch (const Error&) {
      }
    }
    return std::make_pair(fits, rows);
  };
  auto [fits, rows] = fit_all(labels, k);

  // Nearest fitted surface per point, within each segment's padded box.
  std::vector<QuadricType> point_types(static_cast<std::size_t>(n));
  {
    std::vector<std::optional<metrics::SurfaceDistance>> dist(static_cast<std::size_t>(k));
    std::vector<Box> boxes(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) {
      if (!fits[static_cast<std::size_t>(s)]) continue;
      dist[static_cast<std::size_t>(s)].emplace(fits[static_cast<std::size_t>(s)]->quadric);
      boxes[static_cast<std::size_t>(s)] = padded_box(gather(cloud, rows[static_cast<std::size_t>(s)], 0).points, 0.05, 0.02);
    }
    std::vector<int> relabeled = labels;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3 x = cloud.points.row(i).transpose();
      int best = labels[static_cast<std::size_t>(i)];
      double best_d = std::numeric_limits<double>::infinity();
      for (int s = 0; s < k; ++s) {
        if (!dist[static_cast<std::size_t>(s)] || !boxes[static_cast<std::size_t>(s)].contains(x)) continue;
        const double d = dist[static_cast<std::size_t>(s)]->distance(x);
        if (d < best_d) best_d = d, best = s;
      }
      relabeled[static_cast<std::size_t>(i)] = best;
      point_types[static_cast<std::size_t>(i)] =
          fits[static_cast<std::size_t>(best)] ? fits[static_cast<std::size_t>(best)]->type
                                             : QuadricType::plane();
    }
    if (cfg.relabel) labels = std::move(relabeled);
  }
  // Drop segments emptied by relabeling, keeping point types aligned.
  k = compact(labels);
  SegmentMembership membership(labels, k);
  const std::vector<QuadricType> voted = vote_type(point_types, membership);

  result.types = voted;
  result.errors.assign(static_cast<std::size_t>(k), "");
  for (int s = 0; s < k; ++s) {
    const Segment seg = extract_segment(cloud, membership, s);
    fit::FitResult fr;
    try {
      fr = fit::fit_constrained(seg, voted[static_cast<std::size_t>(s)], cfg.fit);
    } catch (const Error& e) {
      result.errors[static_cast<std::size_t>(s)] = e.what();
      fr.type = voted[static_cast<std::size_t>(s)];
      fr.converged = false;
      fr.residual = std::numeric_limits<double>::infinity();
      fr.inlier_fraction = 0.0;
    }
    result.fits.push_back(fr);
  }

  // Back to the caller's point order.
  std::vector<int> original(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    original[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = labels[static_cast<std::size_t>(i)];
  }
  result.membership = SegmentMembership(std::move(original), k);
  return result;
}

}  // namespace quadrics::detect
