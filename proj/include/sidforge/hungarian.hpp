#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sidforge/error.hpp"

namespace sidforge {

struct AssignmentResult {
  std::vector<std::size_t> row_to_col;
  double total_cost = 0.0;
};

// Rectangular min-cost assignment (Kuhn-Munkres with potentials) for a
// row-major `rows x cols` cost matrix with rows <= cols. Every row receives a
// distinct column. O(rows^2 * cols).
//
// Columns are scanned in ascending order and only strict improvements are
// taken, so among equal-cost optima the result is fixed by the input order.
inline AssignmentResult solve_assignment(std::span<const double> costs, std::size_t rows,
                                         std::size_t cols) {
  if (costs.size() != rows * cols) {
    throw Error(ErrorCode::DimMismatch, "cost buffer has " + std::to_string(costs.size()) +
                                            " entries, expected " + std::to_string(rows * cols));
  }
  if (rows > cols) {
    throw Error(ErrorCode::GroupExceedsCapacity,
                std::to_string(rows) + " rows cannot be matched into " + std::to_string(cols) +
                    " columns");
  }
  AssignmentResult result;
  result.row_to_col.assign(rows, 0);
  if (rows == 0) return result;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto a = [&](std::size_t i, std::size_t j) { return costs[(i - 1) * cols + (j - 1)]; };

  // 1-based; column 0 is a virtual sentinel.
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0), minv(cols + 1);
  std::vector<std::size_t> owner(cols + 1, 0), way(cols + 1, 0);
  std::vector<char> used(cols + 1);

  for (std::size_t i = 1; i <= rows; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = a(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= cols; ++j) {
    if (owner[j] != 0) result.row_to_col[owner[j] - 1] = j - 1;
  }
  for (std::size_t i = 0; i < rows; ++i) result.total_cost += costs[i * cols + result.row_to_col[i]];
  return result;
}

}  // namespace sidforge
