#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace msg {

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), sorted by row
  double total_cost = 0;                                   // sum of the chosen entries, in row order
};

/// Minimum-cost one-to-one assignment (Hungarian method, O(n^3)) covering
/// min(rows, cols) pairs. Rectangular inputs are padded to square with a
/// constant larger than every real entry. Ties resolve toward the lowest
/// column index scanned first, so results are deterministic.
/// Throws ValidationError on non-finite costs.
Assignment solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace msg
