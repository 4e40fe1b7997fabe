#include "w1bench/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace w1bench {

AssignmentResult solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionError("assignment cost matrix must be square");
  if (n == 0) return {{}, 0.0};

  std::vector<double> u(n, 0.0), v(n, 0.0);
  std::vector<int> rowsol(n, -1), colsol(n, -1);

  // Column reduction: v[j] = column minimum, assign the argmin row if free.
  for (int j = n - 1; j >= 0; --j) {
    int imin = 0;
    double cmin = cost(0, j);
    for (int i = 1; i < n; ++i) {
      if (cost(i, j) < cmin) {
        cmin = cost(i, j);
        imin = i;
      }
    }
    v[j] = cmin;
    if (rowsol[imin] == -1) {
      rowsol[imin] = j;
      colsol[j] = imin;
    }
  }

  std::vector<int> free_rows;
  for (int i = 0; i < n; ++i)
    if (rowsol[i] == -1) free_rows.push_back(i);

  // Augmenting row reduction: a free row bids for its best column with the
  // margin to the second best; the bumped owner rejoins the free pool. Dual
  // feasibility is preserved because v[j1] only decreases.
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<int> still_free;
    for (const int i : free_rows) {
      double u1 = std::numeric_limits<double>::infinity();
      double u2 = std::numeric_limits<double>::infinity();
      int j1 = -1;
      for (int j = 0; j < n; ++j) {
        const double r = cost(i, j) - v[j];
        if (r < u1) {
          u2 = u1;
          u1 = r;
          j1 = j;
        } else if (r < u2) {
          u2 = r;
        }
      }
      const int owner = colsol[j1];
      if (u1 < u2) {
        v[j1] -= (u2 - u1);
        u[i] = u2;
      } else if (owner >= 0) {
        still_free.push_back(i);  // tie without a free column; leave for Dijkstra
        continue;
      } else {
        u[i] = u1;
      }
      rowsol[i] = j1;
      colsol[j1] = i;
      if (owner >= 0) {
        rowsol[owner] = -1;
        still_free.push_back(owner);  // bumped rows wait for the next pass
      }
    }
    free_rows = std::move(still_free);
    if (free_rows.empty()) break;
  }

  std::vector<double> d(n);
  std::vector<int> pred(n), todo(n);
  std::vector<char> done(n);

  for (const int i0 : free_rows) {
    // Dijkstra over columns in the reduced-cost graph. Reduced costs are
    // clamped at zero to absorb float rounding on tight edges.
    for (int j = 0; j < n; ++j) {
      d[j] = std::max(0.0, cost(i0, j) - u[i0] - v[j]);
      pred[j] = i0;
      done[j] = 0;
      todo[j] = j;
    }
    int n_todo = n;
    int jfree = -1;
    double delta = 0.0;
    for (;;) {
      int kbest = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < n_todo; ++k) {
        if (d[todo[k]] < best) {
          best = d[todo[k]];
          kbest = k;
        }
      }
      if (kbest < 0)
        throw AssignmentInfeasible("no augmenting path in a complete bipartite graph");
      const int jbest = todo[kbest];
      todo[kbest] = todo[--n_todo];
      done[jbest] = 1;
      delta = d[jbest];
      if (colsol[jbest] == -1) {
        jfree = jbest;
        break;
      }
      const int i = colsol[jbest];
      const double off = delta - u[i] - 0.0;
      for (int k = 0; k < n_todo; ++k) {
        const int j = todo[k];
        const double cand = off + std::max(u[i], cost(i, j) - v[j]);
        if (cand < d[j]) {
          d[j] = cand;
          pred[j] = i;
        }
      }
    }

    for (int j = 0; j < n; ++j) {
      if (!done[j]) continue;
      v[j] += d[j] - delta;
      if (colsol[j] != -1) u[colsol[j]] += delta - d[j];
    }
    u[i0] += delta;

    int j = jfree;
    for (;;) {
      const int i = pred[j];
      colsol[j] = i;
      const int jnext = rowsol[i];
      rowsol[i] = j;
      if (i == i0) break;
      j = jnext;
    }
  }

  AssignmentResult res;
  res.row_to_col = rowsol;
  double total = 0;
  for (int i = 0; i < n; ++i) total += cost(i, rowsol[i]);
  res.cost = total;
  return res;
}

}  // namespace w1bench
