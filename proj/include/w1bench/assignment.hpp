#pragma once

#include <Eigen/Core>

#include <vector>

#include "w1bench/errors.hpp"

namespace w1bench {

struct AssignmentResult {
  std::vector<int> row_to_col;  // permutation sigma: row i matched to column sigma(i)
  double cost = 0;              // sum of matched entries
};

// Exact minimum-cost perfect matching on a dense square cost matrix via
// shortest augmenting paths over reduced costs (Jonker-Volgenant style
// column reduction followed by Dijkstra phases). Deterministic.
AssignmentResult solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace w1bench
