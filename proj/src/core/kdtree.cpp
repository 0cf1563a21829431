#include "quadrics/core/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace quadrics {
namespace {

bool closer(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  if (a.squared_distance != b.squared_distance) return a.squared_distance < b.squared_distance;
  return a.index < b.index;
}

}  // namespace

KdTree::KdTree(Matrix data, int leaf_size) : data_(std::move(data)), leaf_size_(leaf_size) {
  order_.resize(static_cast<std::size_t>(data_.rows()));
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  if (data_.rows() > 0) build(0, data_.rows());
}

int KdTree::build(Eigen::Index begin, Eigen::Index end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= leaf_size_) return id;

  const auto first = order_.begin() + begin;
  const auto last = order_.begin() + end;
  Eigen::VectorXd lo = data_.row(*first).transpose();
  Eigen::VectorXd hi = lo;
  for (auto it = first; it != last; ++it) {
    lo = lo.cwiseMin(data_.row(*it).transpose());
    hi = hi.cwiseMax(data_.row(*it).transpose());
  }
  Eigen::Index axis = 0;
  const double extent = (hi - lo).maxCoeff(&axis);
  if (extent <= 0.0) return id;  // all rows identical

  const Eigen::Index mid = begin + (end - begin) / 2;
  std::nth_element(first, order_.begin() + mid, last, [&](Eigen::Index a, Eigen::Index b) {
    const double va = data_(a, axis), vb = data_(b, axis);
    return va != vb ? va < vb : a < b;
  });
  nodes_[id].axis = static_cast<int>(axis);
  nodes_[id].split = data_(order_[mid], axis);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<KdTree::Neighbor> KdTree::knn(const Eigen::Ref<const Eigen::VectorXd>& query,
                                          int k) const {
  std::vector<Neighbor> heap;  // max-heap on (distance, index)
  if (nodes_.empty() || k <= 0) return heap;
  const auto worse = [](const Neighbor& a, const Neighbor& b) { return closer(a, b); };

  std::vector<std::pair<int, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (static_cast<int>(heap.size()) == k && bound > heap.front().squared_distance) continue;
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (Eigen::Index i = node.begin; i < node.end; ++i) {
        const Eigen::Index row = order_[i];
        const Neighbor n{row, (data_.row(row).transpose() - query).squaredNorm()};
        if (static_cast<int>(heap.size()) < k) {
          heap.push_back(n);
          std::push_heap(heap.begin(), heap.end(), worse);
        } else if (closer(n, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), worse);
          heap.back() = n;
          std::push_heap(heap.begin(), heap.end(), worse);
        }
      }
      continue;
    }
    const double diff = query(node.axis) - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    stack.emplace_back(far, std::max(bound, diff * diff));
    stack.emplace_back(near, bound);
  }
  std::sort(heap.begin(), heap.end(), closer);
  return heap;
}

std::vector<KdTree::Neighbor> KdTree::radius(const Eigen::Ref<const Eigen::VectorXd>& query,
                                             double radius) const {
  std::vector<Neighbor> out;
  if (nodes_.empty()) return out;
  const double r2 = radius * radius;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.axis < 0) {
      for (Eigen::Index i = node.begin; i < node.end; ++i) {
        const Eigen::Index row = order_[i];
        const double d2 = (data_.row(row).transpose() - query).squaredNorm();
        if (d2 <= r2) out.push_back({row, d2});
      }
      continue;
    }
    const double diff = query(node.axis) - node.split;
    if (diff <= radius) stack.push_back(node.left);
    if (diff >= -radius) stack.push_back(node.right);
  }
  std::sort(out.begin(), out.end(),
            [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
  return out;
}

}  // namespace quadrics
