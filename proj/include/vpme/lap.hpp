#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "vpme/errors.hpp"

namespace vpme {

// Dense linear assignment: minimizes sum_i cost(i, perm(i)) over
// permutations. Shortest augmenting paths on reduced costs seeded by a
// column-reduction / augmenting-row-reduction warm start (the classic
// Jonker-Volgenant scheme), O(n^3) worst case and much faster in practice.
// On exit the dual pair (u, v) is checked for feasibility, which certifies
// optimality of the returned matching up to accumulated round-off.
inline double solve_assignment(int n, const std::vector<double>& cost,
                               std::vector<int>& rowsol) {
  if (n <= 0 || cost.size() != static_cast<std::size_t>(n) * n)
    throw DimensionError("assignment: cost matrix size mismatch");
  const double INF = std::numeric_limits<double>::infinity();
  auto c = [&](int i, int j) -> double {
    return cost[static_cast<std::size_t>(i) * n + j];
  };

  rowsol.assign(n, -1);
  std::vector<int> colsol(n, -1);
  std::vector<double> v(n, 0.0);

  // Column reduction: each column's price is its cheapest entry; assign the
  // minimizing row when still free.
  std::vector<int> matches(n, 0);
  for (int j = n - 1; j >= 0; --j) {
    double minv = c(0, j);
    int imin = 0;
    for (int i = 1; i < n; ++i)
      if (c(i, j) < minv) {
        minv = c(i, j);
        imin = i;
      }
    v[j] = minv;
    if (++matches[imin] == 1) {
      rowsol[imin] = j;
      colsol[j] = imin;
    }
  }

  // Reduction transfer for singly assigned rows; collect the free rows.
  std::vector<int> free_rows;
  free_rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (matches[i] == 0) {
      free_rows.push_back(i);
    } else if (matches[i] == 1) {
      const int j1 = rowsol[i];
      double mn = INF;
      for (int j = 0; j < n; ++j)
        if (j != j1) mn = std::min(mn, c(i, j) - v[j]);
      if (mn < INF) v[j1] -= mn;
    }
  }

  // Augmenting row reduction, two sweeps: each free row grabs its best
  // column, lowering that column's price to the second-best slack so later
  // rows see fair prices; displaced rows are retried or deferred.
  int num_free = static_cast<int>(free_rows.size());
  for (int sweep = 0; sweep < 2 && num_free > 0; ++sweep) {
    int k = 0;
    const int prev_free = num_free;
    num_free = 0;
    // This phase is a warm-start heuristic, so it may hand any leftover rows
    // to the exact augmentation stage; the budget breaks retry cycles that
    // near-degenerate costs could otherwise sustain.
    long budget = 16L * prev_free + 64;
    while (k < prev_free) {
      if (--budget < 0) {
        while (k < prev_free) free_rows[num_free++] = free_rows[k++];
        break;
      }
      const int i = free_rows[k++];
      double umin = c(i, 0) - v[0], usub = INF;
      int j1 = 0, j2 = -1;
      for (int j = 1; j < n; ++j) {
        const double h = c(i, j) - v[j];
        if (h < usub) {
          if (h >= umin) {
            usub = h;
            j2 = j;
          } else {
            usub = umin;
            j2 = j1;
            umin = h;
            j1 = j;
          }
        }
      }
      int i0 = colsol[j1];
      // Cut the column price only when the cut survives rounding: a cut that
      // v[j1] absorbs leaves the slacks unchanged, and the two rows would
      // then displace each other forever. Sub-rounding gaps are ties.
      const bool cuts = usub - umin > 1e-12 * (1.0 + std::abs(v[j1]));
      if (cuts) {
        v[j1] -= usub - umin;
      } else if (i0 >= 0 && j2 >= 0) {
        j1 = j2;
        i0 = colsol[j1];
      }
      rowsol[i] = j1;
      colsol[j1] = i;
      if (i0 >= 0) {
        rowsol[i0] = -1;
        if (cuts)
          free_rows[--k] = i0;  // retry displaced row in this sweep
        else
          free_rows[num_free++] = i0;  // defer to the next sweep
      }
    }
  }
  free_rows.resize(num_free);

  // Augmentation: for each remaining free row, grow a shortest alternating
  // path over reduced costs (Dijkstra over columns) and flip it.
  std::vector<double> d(n);
  std::vector<int> pred(n), col(n);
  for (const int f : free_rows) {
    for (int j = 0; j < n; ++j) {
      d[j] = c(f, j) - v[j];
      pred[j] = f;
      col[j] = j;
    }
    int low = 0, up = 0, last = -1, endofpath = -1;
    double min = 0.0;
    while (endofpath < 0) {
      if (low == up) {
        last = low - 1;
        min = d[col[up++]];
        for (int k = up; k < n; ++k) {
          const int j = col[k];
          const double h = d[j];
          if (h <= min) {
            if (h < min) {
              up = low;
              min = h;
            }
            col[k] = col[up];
            col[up++] = j;
          }
        }
        for (int k = low; k < up && endofpath < 0; ++k)
          if (colsol[col[k]] < 0) endofpath = col[k];
        if (endofpath >= 0) break;
      }
      const int j1 = col[low++];
      const int i = colsol[j1];
      const double u1 = c(i, j1) - v[j1] - min;
      for (int k = up; k < n; ++k) {
        const int j = col[k];
        const double h = c(i, j) - v[j] - u1;
        if (h < d[j]) {
          d[j] = h;
          pred[j] = i;
          if (h == min) {
            if (colsol[j] < 0) {
              endofpath = j;
              break;
            }
            col[k] = col[up];
            col[up++] = j;
          }
        }
      }
    }
    for (int k = 0; k <= last; ++k) {
      const int j = col[k];
      v[j] += d[j] - min;
    }
    int ep = endofpath;
    int i;
    do {
      i = pred[ep];
      colsol[ep] = i;
      const int next = rowsol[i];
      rowsol[i] = ep;
      ep = next;
    } while (i != f);
  }

  // Dual feasibility certificate: reduced costs must be (numerically)
  // nonnegative everywhere and zero on the matching.
  double scale = 1.0, total = 0.0;
  for (const double x : cost) scale = std::max(scale, std::abs(x));
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) {
    if (rowsol[i] < 0) throw Error("assignment: incomplete matching");
    u[i] = c(i, rowsol[i]) - v[rowsol[i]];
    total += c(i, rowsol[i]);
  }
  const double tol = 1e-9 * scale * n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (c(i, j) - u[i] - v[j] < -tol)
        throw Error("assignment: dual certificate violated");
  return total;
}

}  // namespace vpme
