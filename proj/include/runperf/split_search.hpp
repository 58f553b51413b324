#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace runperf {

/// Dense row-major matrix of training features.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

/// Binary tree with a fixed-width value vector at every node (only leaf values
/// are used). Samples with x[feature] <= threshold go left.
struct Tree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int depth = 0;
    bool operator==(const Node&) const = default;
  };
  std::vector<Node> nodes;
  std::size_t value_width = 1;
  std::vector<double> values;  // nodes.size() * value_width

  std::size_t leaf_of(std::span<const double> x) const;
  std::span<const double> predict(std::span<const double> x) const {
    return {values.data() + leaf_of(x) * value_width, value_width};
  }
  int depth() const;
  bool operator==(const Tree&) const = default;
};

struct GradientPair {
  double g = 0.0;
  double h = 0.0;
};

/// Parameters of a second-order regression tree.
struct GrowParams {
  int max_depth = 7;
  int min_samples_leaf = 1;
  double l2 = 1.0;
  double min_child_hessian = 0.0;
  /// A node splits when its best gain reaches this value.
  double min_split_gain = 0.0;
  /// Leaf values are -G / (H + l2) multiplied by this factor.
  double leaf_scale = 1.0;
};

/// Per-feature row order sorted by (value, row index), built once per
/// training matrix and shared by every tree grown on it.
class PresortedColumns {
 public:
  explicit PresortedColumns(const FeatureMatrix& x);
  std::span<const int> order(std::size_t feature) const { return {order_.data() + feature * rows_, rows_}; }
  /// Feature values in the same order as `order(feature)`.
  std::span<const double> values(std::size_t feature) const { return {values_.data() + feature * rows_, rows_}; }

 private:
  std::size_t rows_;
  std::vector<int> order_;
  std::vector<double> values_;
};

/// Level-wise exact greedy growth. The split search over features runs as an
/// OpenMP loop; the winner is chosen by a fixed-order reduction (highest
/// gain, then lowest feature, then lowest threshold), so the tree does not
/// depend on the thread count.
Tree grow_tree(const FeatureMatrix& x, const PresortedColumns& sorted, std::span<const GradientPair> grad,
               std::span<const int> features, const GrowParams& params, bool parallel = true);

/// Serial reference: for every node and feature, sorts the node's rows and
/// scans all midpoints. Produces the same tree as grow_tree.
Tree grow_tree_reference(const FeatureMatrix& x, std::span<const GradientPair> grad, std::span<const int> features,
                         const GrowParams& params);

}  // namespace runperf
