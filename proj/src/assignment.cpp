#include "msg/assignment.hpp"

#include <algorithm>
#include <limits>

#include "msg/errors.hpp"

namespace msg {

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  Assignment result;
  const auto rows = static_cast<std::size_t>(cost.rows());
  const auto cols = static_cast<std::size_t>(cost.cols());
  if (rows == 0 || cols == 0) return result;
  if (!cost.allFinite()) throw ValidationError("assignment cost matrix has non-finite entries");

  const std::size_t n = std::max(rows, cols);
  const double pad = cost.maxCoeff() + 1.0;
  auto at = [&](std::size_t r, std::size_t c) { return (r < rows && c < cols) ? cost(r, c) : pad; };

  // Shortest augmenting path with row/column potentials, 1-based with a
  // sentinel column 0.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);  // match[col] = row
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(n, n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c = row_to_col[r];
    if (c < cols) {
      result.pairs.emplace_back(r, c);
      result.total_cost += cost(r, c);
    }
  }
  return result;
}

}  // namespace msg
