#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "w1bench/metrics.hpp"
#include "w1bench/rng.hpp"

using namespace w1bench;

namespace {

Mat random_field(int n, int d, RngStream& rng, double scale = 1.0) {
  Mat g(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = scale * rng.normal();
  return g;
}

}  // namespace

TEST_CASE("cos of identical, negated and orthogonal fields") {
  RngStream rng(21);
  const Mat g = random_field(64, 4, rng);
  CHECK(cos_metric(g, g) == doctest::Approx(1.0));
  CHECK(cos_metric(-g, g) == doctest::Approx(-1.0));

  Mat a = Mat::Zero(16, 2), b = Mat::Zero(16, 2);
  a.col(0).setOnes();
  b.col(1).setOnes();
  CHECK(cos_metric(a, b) == doctest::Approx(0.0));
}

TEST_CASE("cos rejects zero fields and ignores positive scaling") {
  RngStream rng(22);
  const Mat g = random_field(32, 3, rng);
  CHECK_THROWS_AS(cos_metric(Mat::Zero(32, 3), g), ZeroFieldError);
  CHECK(cos_metric(2.5 * g, g) == doctest::Approx(cos_metric(g, g)));
  // l2 is not scale invariant
  CHECK(l2_metric(2.5 * g, g) > l2_metric(g, g));
}

TEST_CASE("l2 of matched and reflected unit fields") {
  Mat g = Mat::Zero(10, 2);
  g.col(0).setOnes();
  CHECK(l2_metric(g, g) == doctest::Approx(0.0));
  CHECK(l2_metric(-g, g) == doctest::Approx(4.0));
}

TEST_CASE("l2 / cos / norm algebraic identity") {
  RngStream rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat ghat = random_field(128, 4, rng, rng.uniform(0.5, 2.0));
    const Mat gstar = random_field(128, 4, rng);
    const double nh = field_l2_norm(ghat), ns = field_l2_norm(gstar);
    const double lhs = l2_metric(ghat, gstar);
    const double rhs = nh * nh + ns * ns - 2.0 * cos_metric(ghat, gstar) * nh * ns;
    CHECK(std::abs(lhs - rhs) < 1e-9);
  }
}

TEST_CASE("deviation bands") {
  CHECK(w1_deviation(1.0, 1.0).dev_pct == doctest::Approx(0.0));
  CHECK(w1_deviation(1.0, 1.0).band == "green");
  CHECK(w1_deviation(1.6, 1.0).dev_pct == doctest::Approx(60.0));
  CHECK(w1_deviation(1.6, 1.0).band == "red");
  CHECK(w1_deviation(0.80, 1.0).dev_pct == doctest::Approx(20.0));
  CHECK(w1_deviation(0.80, 1.0).band == "lime");
  CHECK(w1_deviation(0.65, 1.0).band == "orange");
}

TEST_CASE("disjoint shards agree within combined error bars") {
  RngStream rng(24);
  const int n = 4096;
  Mat gstar = random_field(n, 4, rng);
  Mat ghat = gstar + 0.3 * random_field(n, 4, rng);

  const int half = n / 2;
  const Mat h1 = ghat.topRows(half), h2 = ghat.bottomRows(half);
  const Mat s1 = gstar.topRows(half), s2 = gstar.bottomRows(half);
  const double c1 = cos_metric(h1, s1), c2 = cos_metric(h2, s2);
  const double se1 = shard_stderr(h1, s1, 16, &cos_metric);
  const double se2 = shard_stderr(h2, s2, 16, &cos_metric);
  CHECK(std::abs(c1 - c2) <= 3.0 * std::sqrt(se1 * se1 + se2 * se2) + 1e-12);

  const double l1 = l2_metric(h1, s1), l2v = l2_metric(h2, s2);
  const double le1 = shard_stderr(h1, s1, 16, &l2_metric);
  const double le2 = shard_stderr(h2, s2, 16, &l2_metric);
  CHECK(std::abs(l1 - l2v) <= 3.0 * std::sqrt(le1 * le1 + le2 * le2) + 1e-12);
}

TEST_CASE("csv row layout is pinned") {
  CHECK(csv_header() ==
        "solver,D,N,p,seed,cos,l2,w1_hat,w1_true,dev_pct,n_samples,wall_time_s");
  EvalReport r;
  r.solver = "gp";
  r.dim = 4;
  r.n_funnels = 4;
  r.p = 8;
  r.seed = 7;
  r.cos = 0.5;
  r.l2 = 0.25;
  r.w1_hat = 1.5;
  r.w1_true = 1.25;
  r.dev_pct = 20;
  r.n_samples = 8192;
  r.wall_time_s = 0;
  CHECK(to_csv_row(r) == "gp,4,4,8,7,0.5,0.25,1.5,1.25,20,8192,0");
}
