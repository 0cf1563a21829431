#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace quadrics {

/// Static k-d tree over the rows of a dense matrix (any dimension).
/// The tree keeps a copy of the data; query results are row indices.
class KdTree {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit KdTree(Matrix data, int leaf_size = 16);

  struct Neighbor {
    Eigen::Index index;
    double squared_distance;
  };

  /// The k nearest rows, sorted by distance then index. Returns fewer than k
  /// only when the tree holds fewer rows.
  [[nodiscard]] std::vector<Neighbor> knn(const Eigen::Ref<const Eigen::VectorXd>& query,
                                          int k) const;
  /// All rows within `radius` (inclusive), sorted by index.
  [[nodiscard]] std::vector<Neighbor> radius(const Eigen::Ref<const Eigen::VectorXd>& query,
                                             double radius) const;

  [[nodiscard]] Eigen::Index size() const { return data_.rows(); }
  [[nodiscard]] const Matrix& data() const { return data_; }

 private:
  struct Node {
    Eigen::Index begin, end;  // range into order_
    int axis = -1;            // -1 for leaves
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(Eigen::Index begin, Eigen::Index end);

  Matrix data_;
  int leaf_size_;
  std::vector<Eigen::Index> order_;
  std::vector<Node> nodes_;
};

}  // namespace quadrics
