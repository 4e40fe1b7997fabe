#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "oracles.hpp"
#include "w1bench/assignment.hpp"
#include "w1bench/rng.hpp"

using namespace w1bench;

namespace {

Eigen::MatrixXd euclidean_cost(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  Eigen::MatrixXd c(X.rows(), Y.rows());
  for (int i = 0; i < X.rows(); ++i)
    for (int j = 0; j < Y.rows(); ++j) c(i, j) = (X.row(i) - Y.row(j)).norm();
  return c;
}

}  // namespace

TEST_CASE("two point line instance") {
  // X = {0, 1}, Y = {1, 2}: monotone matching costs 1 + 1 = 2, mean 1.0
  Eigen::MatrixXd X(2, 1), Y(2, 1);
  X << 0, 1;
  Y << 1, 2;
  const auto res = solve_assignment(euclidean_cost(X, Y));
  CHECK(res.cost == doctest::Approx(2.0));
  CHECK(res.row_to_col[0] == 0);
  CHECK(res.row_to_col[1] == 1);
}

TEST_CASE("singleton instance") {
  Eigen::MatrixXd c(1, 1);
  c << 3.25;
  const auto res = solve_assignment(c);
  CHECK(res.cost == doctest::Approx(3.25));
  CHECK(res.row_to_col[0] == 0);
}

TEST_CASE("matches factorial brute force up to n = 8") {
  RngStream rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));  // 2..8
    Eigen::MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cost(i, j) = rng.uniform(0, 10);
    const auto res = solve_assignment(cost);
    const auto [bf_cost, bf_perm] = testing::brute_force_assignment(cost);
    CHECK(res.cost == doctest::Approx(bf_cost).epsilon(1e-12));
  }
}

TEST_CASE("deterministic across repeated solves") {
  RngStream rng(32);
  Eigen::MatrixXd cost(50, 50);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) cost(i, j) = rng.uniform(0, 1);
  const auto a = solve_assignment(cost);
  const auto b = solve_assignment(cost);
  CHECK(a.cost == b.cost);
  CHECK(a.row_to_col == b.row_to_col);
}

TEST_CASE("dual certificate on a mid-size geometric instance") {
  // Optimality cross-check without brute force: compare against the
  // column-minimum lower bound and verify the matching is a permutation.
  RngStream rng(33);
  const int n = 128;
  Eigen::MatrixXd X(n, 4), Y(n, 4);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 4; ++j) {
      X(i, j) = rng.uniform(-2.5, 2.5);
      Y(i, j) = rng.uniform(-2.5, 2.5);
    }
  const auto cost = euclidean_cost(X, Y);
  const auto res = solve_assignment(cost);

  std::vector<char> seen(n, 0);
  for (int i = 0; i < n; ++i) {
    REQUIRE(res.row_to_col[i] >= 0);
    REQUIRE(res.row_to_col[i] < n);
    CHECK(!seen[res.row_to_col[i]]);
    seen[res.row_to_col[i]] = 1;
  }
  double lower = 0;
  for (int j = 0; j < n; ++j) lower += cost.col(j).minCoeff();
  CHECK(res.cost >= lower - 1e-9);

  // random transpositions cannot improve the matching
  for (int trial = 0; trial < 2000; ++trial) {
    const int i = static_cast<int>(rng.below(n));
    const int k = static_cast<int>(rng.below(n));
    if (i == k) continue;
    const double before = cost(i, res.row_to_col[i]) + cost(k, res.row_to_col[k]);
    const double after = cost(i, res.row_to_col[k]) + cost(k, res.row_to_col[i]);
    CHECK(after >= before - 1e-9);
  }
}

TEST_CASE("batch of 1024 solves within the time budget") {
  RngStream rng(34);
  const int n = 1024;
  Eigen::MatrixXd X(n, 8), Y(n, 8);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 8; ++j) {
      X(i, j) = rng.uniform(-2.5, 2.5);
      Y(i, j) = rng.uniform(-2.5, 2.5);
    }
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = solve_assignment(euclidean_cost(X, Y));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(res.cost > 0);
  CHECK(secs < 30.0);
}
