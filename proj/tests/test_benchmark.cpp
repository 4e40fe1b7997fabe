#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "w1bench/benchmark.hpp"

using namespace w1bench;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

BenchmarkPair single_funnel_pair(double B, double p,
                                 Orientation o = Orientation::Forward) {
  Mat centers(1, 2);
  centers << 0, 0;
  Vec offsets(1);
  offsets << 0;
  return BenchmarkPair(MinFunnel(centers, offsets), B, p,
                       BaseDistribution::uniform_box(), o, 123);
}

}  // namespace

TEST_CASE("generate_pair is deterministic and in the box") {
  const auto a = generate_pair(2, 4, 2.5, 8.0, 7);
  const auto b = generate_pair(2, 4, 2.5, 8.0, 7);
  CHECK(a.funnel().centers() == b.funnel().centers());
  CHECK(a.funnel().offsets() == b.funnel().offsets());
  CHECK((a.funnel().centers().array().abs() <= 2.5).all());

  const auto c = generate_pair(2, 4, 2.5, 8.0, 8);
  CHECK(a.funnel().centers() != c.funnel().centers());
}

TEST_CASE("offset statistics match N(0, 0.1)") {
  double sum = 0, sumsq = 0;
  long count = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto pair = generate_pair(2, 256, 2.5, 8.0, seed);
    for (int i = 0; i < 256; ++i) {
      const double b = pair.funnel().offsets()[i];
      sum += b;
      sumsq += b * b;
      ++count;
    }
  }
  const double mean = sum / count;
  const double std = std::sqrt(sumsq / count - mean * mean);
  CHECK(std::abs(mean) < 4.0 * std::sqrt(0.1) / std::sqrt(double(count)));
  CHECK(std == doctest::Approx(std::sqrt(0.1)).epsilon(0.05));
}

TEST_CASE("pair construction rejects p <= 1") {
  CHECK_THROWS_AS(generate_pair(2, 4, 2.5, 0.5, 7), ConstructionError);
  CHECK_THROWS_AS(generate_pair(2, 4, 2.5, 1.0, 7), ConstructionError);
}

TEST_CASE("map moves t to t^p from the lower endpoint") {
  // single funnel at the origin, box [-1,1]^2: the ray through (0.5, 0) is
  // [(0,0), (1,0)], so with p = 2 the image of t = 0.5 is t^2 = 0.25
  const auto pair = single_funnel_pair(1.0, 2.0);
  Vec x(2);
  x << 0.5, 0.0;
  const Vec y = pair.map_T(x);
  CHECK(y[0] == doctest::Approx(0.25));
  CHECK(y[1] == doctest::Approx(0.0));
}

TEST_CASE("lower ray endpoint is a fixed point") {
  // center outside the box: the clipped lower endpoint is on the boundary
  Mat centers(1, 2);
  centers << -2, 0;
  Vec offsets(1);
  offsets << 0;
  BenchmarkPair pair(MinFunnel(centers, offsets), 1.0, 4.0,
                     BaseDistribution::uniform_box(), Orientation::Forward, 5);
  Vec x0(2);
  x0 << -1.0, 0.0;
  const auto res = pair.map_T_ex(x0);
  CHECK(!res.identity_fallback);
  CHECK((res.y - x0).norm() < 1e-12);
}

TEST_CASE("map queries outside the box are rejected") {
  const auto pair = single_funnel_pair(1.0, 2.0);
  Vec x(2);
  x << 1.5, 0.0;
  CHECK_THROWS_AS(pair.map_T(x), OutOfBoxError);
}

TEST_CASE("ray monotonicity identity and fallback rate") {
  RngStream rng(41);
  for (int D : {2, 4, 8}) {
    const auto pair = generate_pair(D, 4, 2.5, 8.0, 70 + D);
    long fallbacks = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const Vec x = pair.sample_base(rng);
      const auto res = pair.map_T_ex(x);
      if (res.identity_fallback) {
        ++fallbacks;
        continue;
      }
      const double lhs = pair.funnel().eval(x) - pair.funnel().eval(res.y);
      const double rhs = (x - res.y).norm();
      CHECK(std::abs(lhs - rhs) <= 1e-9);
      // descent along the ray
      CHECK(pair.funnel().eval(res.y) <= pair.funnel().eval(x) + 1e-12);
    }
    CHECK(fallbacks <= n / 1000);
  }
}

TEST_CASE("map inverse undoes the map") {
  RngStream rng(42);
  const auto pair = generate_pair(4, 8, 2.5, 8.0, 99);
  int tested = 0;
  while (tested < 200) {
    const Vec x = pair.sample_base(rng);
    const auto fwd = pair.map_T_ex(x);
    if (fwd.identity_fallback) continue;
    const auto back = pair.map_T_inverse_ex(fwd.y);
    if (back.identity_fallback) continue;
    CHECK((back.y - x).norm() < 1e-6);
    ++tested;
  }
}

TEST_CASE("batch shapes and independence of returned batches") {
  RngStream rng(43);
  const auto pair = generate_pair(3, 4, 2.5, 8.0, 11);
  const auto [X, Y] = pair.sample(17, rng);
  CHECK(X.rows() == 17);
  CHECK(X.cols() == 3);
  CHECK(Y.rows() == 17);
  CHECK(Y.cols() == 3);

  RngStream rng2(43);
  const auto [X2, Y2] = pair.sample(17, rng2);
  CHECK(X == X2);  // deterministic given the stream
  CHECK(Y == Y2);
}

TEST_CASE("pushforward contracts toward the funnel center") {
  RngStream rng(44);
  const auto pair = single_funnel_pair(2.5, 16.0);
  double ex = 0, ey = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const Vec x = pair.sample_base(rng);
    ex += x.norm() / n;
    ey += pair.map_T(x).norm() / n;
  }
  CHECK(ey < ex);
}

TEST_CASE("reversed marginals swap the forward ones") {
  RngStream rng(45);
  const auto fwd = generate_pair(4, 4, 2.5, 8.0, 21, Orientation::Forward);
  const auto rev = generate_pair(4, 4, 2.5, 8.0, 21, Orientation::Reversed);
  const int n = 4096;
  const auto [Xf, Yf] = fwd.sample(n, rng);
  const auto [Xr, Yr] = rev.sample(n, rng);

  // compare u-statistics of the matching marginals within MC error
  const auto& u = fwd.funnel();
  auto mean_u = [&](const Mat& M, double* se) {
    double s = 0, s2 = 0;
    for (int i = 0; i < M.rows(); ++i) {
      const double v = u.eval(M.row(i).transpose());
      s += v;
      s2 += v * v;
    }
    const double m = s / M.rows();
    *se = std::sqrt(std::max(0.0, s2 / M.rows() - m * m) / M.rows());
    return m;
  };
  double se1, se2, se3, se4;
  const double m_yf = mean_u(Yf, &se1), m_xr = mean_u(Xr, &se2);
  const double m_xf = mean_u(Xf, &se3), m_yr = mean_u(Yr, &se4);
  CHECK(std::abs(m_yf - m_xr) <= 4.0 * std::hypot(se1, se2));
  CHECK(std::abs(m_xf - m_yr) <= 4.0 * std::hypot(se3, se4));
}

TEST_CASE("ground truth matches the 1D closed form") {
  // single funnel at 0 on [-B, B]: E||x - T(x)|| = B (1/2 - 1/(p+1))
  Mat centers(1, 1);
  centers << 0;
  Vec offsets(1);
  offsets << 0;
  const double B = 2.0, p = 2.0;
  BenchmarkPair pair(MinFunnel(centers, offsets), B, p,
                     BaseDistribution::uniform_box(), Orientation::Forward, 3);
  RngStream rng(46);
  const auto truth = ground_truth(pair, 1 << 15, rng);
  const double expected = B * (0.5 - 1.0 / (p + 1.0));
  CHECK(std::abs(truth.w1() - expected) <= 3.0 * truth.w1_stderr());
  CHECK(truth.w1_stderr() > 0);
}

TEST_CASE("dual value at the optimal potential equals the cost") {
  RngStream rng(47);
  for (Orientation o : {Orientation::Forward, Orientation::Reversed}) {
    const auto pair = generate_pair(4, 4, 2.5, 8.0, 31, o);
    const auto truth = ground_truth(pair, 1 << 14, rng);
    const auto& u = pair.funnel();
    const double sign = o == Orientation::Forward ? 1.0 : -1.0;

    const int n = 1 << 13;
    const auto [X, Y] = pair.sample(n, rng);
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double d = sign * (u.eval(X.row(i).transpose()) - u.eval(Y.row(i).transpose()));
      s += d;
      s2 += d * d;
    }
    const double dual = s / n;
    const double se = std::sqrt(std::max(0.0, s2 / n - dual * dual) / n);
    CHECK(std::abs(dual - truth.w1()) <=
          3.0 * std::sqrt(se * se + truth.w1_stderr() * truth.w1_stderr()));
  }
}

TEST_CASE("ground-truth gradients are unit length and orientation-signed") {
  RngStream rng(48);
  const auto pair = generate_pair(4, 4, 2.5, 8.0, 31, Orientation::Reversed);
  const auto truth = ground_truth(pair, 1 << 12, rng);
  const auto [X, G] = truth.sample_with_grad(256, rng);
  for (int i = 0; i < X.rows(); ++i) {
    CHECK(std::abs(G.row(i).norm() - 1.0) < 1e-9);
    const Vec g = pair.funnel().grad(X.row(i).transpose());
    CHECK((G.row(i).transpose() + g).norm() < 1e-12);  // reversed flips the sign
  }
}

TEST_CASE("pair files round-trip bit-exactly") {
  const auto pair = generate_pair(3, 5, 2.5, 8.0, 77, Orientation::Reversed);
  const std::string p1 = "pair_roundtrip_1.json", p2 = "pair_roundtrip_2.json";
  save_pair(pair, p1);
  const auto loaded = load_pair(p1);
  save_pair(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(loaded.funnel().centers() == pair.funnel().centers());
  CHECK(loaded.funnel().offsets() == pair.funnel().offsets());
  CHECK(loaded.orientation() == pair.orientation());
  CHECK(loaded.seed() == pair.seed());
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("pair files with bad version or degenerate funnels are rejected") {
  {
    std::ofstream out("pair_bad_version.json");
    out << R"({"version": 99, "dim": 1, "n_funnels": 1, "centers": [[0]],
               "offsets": [0], "box_halfwidth": 2.5, "p": 8,
               "base": {"kind": "uniform_box", "params": {}},
               "orientation": "forward", "seed": 1})";
  }
  CHECK_THROWS_AS(load_pair("pair_bad_version.json"), SchemaVersionError);
  std::remove("pair_bad_version.json");

  {
    std::ofstream out("pair_degenerate.json");
    out << R"({"version": 1, "dim": 1, "n_funnels": 2, "centers": [[0],[1]],
               "offsets": [0, 1], "box_halfwidth": 2.5, "p": 8,
               "base": {"kind": "uniform_box", "params": {}},
               "orientation": "forward", "seed": 1})";
  }
  CHECK_THROWS_AS(load_pair("pair_degenerate.json"), ConstructionError);
  std::remove("pair_degenerate.json");
}

TEST_CASE("truncated noisy sampler stays in the box or fails loudly") {
  Mat centers(1, 2);
  centers << 0, 0;
  Vec offsets(1);
  offsets << 0;
  {
    BenchmarkPair pair(MinFunnel(centers, offsets), 1.0, 8.0,
                       BaseDistribution::truncated_noisy(0.3), Orientation::Forward, 9);
    RngStream rng(49);
    const Mat X = pair.sample_base_batch(512, rng);
    CHECK((X.array().abs() <= 1.0).all());
  }
  {
    // a source far outside the box can never be accepted
    auto far_source = [](RngStream&) {
      Vec v(2);
      v << 50.0, 50.0;
      return v;
    };
    BenchmarkPair pair(MinFunnel(centers, offsets), 1.0, 8.0,
                       BaseDistribution::truncated_noisy(0.01, far_source),
                       Orientation::Forward, 9);
    RngStream rng(50);
    CHECK_THROWS_AS(pair.sample_base(rng), SamplerError);
  }
}

TEST_CASE("regenerated low-D cost has the expected order") {
  RngStream rng(51);
  const auto pair = generate_pair(2, 4, 2.5, 8.0, 7);
  const auto truth = ground_truth(pair, 1 << 14, rng);
  // seed-dependent, so only the order of magnitude is comparable
  CHECK(truth.w1() > 0.2);
  CHECK(truth.w1() < 3.0);
}

TEST_CASE("no 1-Lipschitz witness beats the transport cost") {
  RngStream rng(52);
  const auto pair = generate_pair(4, 4, 2.5, 8.0, 33, Orientation::Forward);
  const auto truth = ground_truth(pair, 1 << 14, rng);
  const int n = 1 << 12;
  // random MinFunnels are 1-Lipschitz witnesses g
  for (std::uint64_t gseed = 60; gseed < 66; ++gseed) {
    const auto witness = generate_pair(4, 8, 2.5, 8.0, gseed).funnel();
    const auto [X, Y] = pair.sample(n, rng);
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double d =
          witness.eval(X.row(i).transpose()) - witness.eval(Y.row(i).transpose());
      s += d;
      s2 += d * d;
    }
    const double mean = s / n;
    const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) / n);
    CHECK(mean <= truth.w1() + 3.0 * std::hypot(se, truth.w1_stderr()));
  }
}
