#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace runperf {

/// Cost at or above which a pair is treated as forbidden.
inline constexpr double kGatedCost = 1e5;

struct AssignmentResult {
  std::vector<std::pair<int, int>> matches;  // (row, column), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_columns;
};

/// Minimum-cost one-to-one assignment of min(rows, cols) pairs (Hungarian
/// method with row/column potentials, O(n^2 m)). Pairs whose cost reaches
/// `gated_cost` are dropped from the result and reported as unmatched.
AssignmentResult assign(const Eigen::MatrixXd& cost, double gated_cost = kGatedCost);

double total_cost(const Eigen::MatrixXd& cost, const AssignmentResult& result);

}  // namespace runperf
