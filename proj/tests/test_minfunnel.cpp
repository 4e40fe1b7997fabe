#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "w1bench/minfunnel.hpp"
#include "w1bench/rng.hpp"

using namespace w1bench;

namespace {

MinFunnel single_funnel_2d() {
  Mat centers(1, 2);
  centers << 0, 0;
  Vec offsets(1);
  offsets << 0;
  return MinFunnel(centers, offsets);
}

MinFunnel two_funnels_1d(double b0 = 0.0, double b1 = 0.0) {
  Mat centers(2, 1);
  centers << -1, 1;
  Vec offsets(2);
  offsets << b0, b1;
  return MinFunnel(centers, offsets);
}

Vec vec1(double x) {
  Vec v(1);
  v << x;
  return v;
}

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

MinFunnel random_funnel(int dim, int n, RngStream& rng, double box = 2.5) {
  for (;;) {
    Mat centers(n, dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) centers(i, j) = rng.uniform(-box, box);
    Vec offsets(n);
    for (int i = 0; i < n; ++i) offsets[i] = rng.normal(0.0, std::sqrt(0.1));
    try {
      return MinFunnel(centers, offsets);
    } catch (const NonDegeneracyError&) {
    }
  }
}

}  // namespace

TEST_CASE("eval matches hand values") {
  CHECK(single_funnel_2d().eval(vec2(3, 4)) == doctest::Approx(5.0));
  CHECK(two_funnels_1d().eval(vec1(-0.5)) == doctest::Approx(0.5));
  CHECK(two_funnels_1d(0.3, 0.0).eval(vec1(0.9)) == doctest::Approx(0.1));
}

TEST_CASE("active funnel index and ties") {
  CHECK(two_funnels_1d().active_funnel(vec1(-0.5)) == 0);
  CHECK_THROWS_AS(two_funnels_1d().active_funnel(vec1(0.0)), TieError);
  CHECK(single_funnel_2d().active_funnel(vec2(1, 1)) == 0);
}

TEST_CASE("construction rejects degenerate funnels") {
  Mat centers(2, 2);
  centers << 0, 0, 1, 0;
  Vec offsets(2);
  offsets << 0, 1;  // ||a_0 - a_1|| = |b_0 - b_1| = 1
  CHECK_THROWS_AS(MinFunnel(centers, offsets), NonDegeneracyError);

  Mat dup(2, 2);
  dup << 0.5, 0.5, 0.5, 0.5;
  Vec off2(2);
  off2 << 0, 0.3;
  CHECK_THROWS_AS(MinFunnel(dup, off2), NonDegeneracyError);
}

TEST_CASE("gradient direction and unit norm") {
  const Vec g = single_funnel_2d().grad(vec2(3, 4));
  CHECK(g[0] == doctest::Approx(0.6));
  CHECK(g[1] == doctest::Approx(0.8));
  CHECK(two_funnels_1d().grad(vec1(-0.5))[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(single_funnel_2d().grad(vec2(0, 0)), AtCenterError);

  RngStream rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const MinFunnel u = random_funnel(4, 8, rng);
    Vec x(4);
    for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-2.5, 2.5);
    try {
      const Vec g4 = u.grad(x);
      CHECK(std::abs(g4.norm() - 1.0) < 1e-12);
    } catch (const TieError&) {
    } catch (const AtCenterError&) {
    }
  }
}

TEST_CASE("gradient matches central finite differences") {
  RngStream rng(12);
  int tested = 0;
  while (tested < 40) {
    const MinFunnel u = random_funnel(4, 8, rng);
    Vec x(4);
    for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-2.5, 2.5);
    Vec g;
    try {
      g = u.grad(x);
    } catch (const TieError&) {
      continue;
    } catch (const AtCenterError&) {
      continue;
    }
    // skip near-tie points where the finite difference would straddle a kink
    if ((x - u.centers().row(u.active_funnel(x)).transpose()).norm() < 1e-2) continue;
    const double h = 1e-5;
    bool near_kink = false;
    Vec fd(4);
    for (int i = 0; i < 4; ++i) {
      Vec lo = x, hi = x;
      lo[i] -= h;
      hi[i] += h;
      try {
        if (u.active_funnel(lo) != u.active_funnel(hi)) near_kink = true;
      } catch (const TieError&) {
        near_kink = true;
      }
      if (near_kink) break;
      fd[i] = (u.eval(hi) - u.eval(lo)) / (2 * h);
    }
    if (near_kink) continue;
    CHECK((fd - g).norm() / g.norm() < 1e-6);
    ++tested;
  }
}

TEST_CASE("transport ray of a single funnel is infinite") {
  const auto ray = single_funnel_2d().transport_ray(vec2(1, 0));
  CHECK(ray.is_infinite());
  CHECK(ray.lower[0] == doctest::Approx(0.0));
  CHECK(ray.lower[1] == doctest::Approx(0.0));
  CHECK(std::abs(ray.direction.norm() - 1.0) < 1e-12);
}

TEST_CASE("transport ray hand example in 1D") {
  const auto ray = two_funnels_1d().transport_ray(vec1(-0.5));
  CHECK(ray.direction[0] == doctest::Approx(1.0));
  CHECK(ray.upper_offset == doctest::Approx(0.5));
  CHECK(ray.upper()[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(ray.lower[0] == doctest::Approx(-1.0));

  // the closed-form endpoint agrees with a dense scan of the active funnel
  const double scanned =
      testing::scan_ray_end(two_funnels_1d(), vec1(-0.5), vec1(1.0), 1e-4, 10.0);
  CHECK(std::abs(scanned - ray.upper_offset) <= 1e-3);
}

TEST_CASE("ray endpoint equals the grid-scan oracle on random funnels") {
  RngStream rng(13);
  int tested = 0;
  while (tested < 25) {
    const MinFunnel u = random_funnel(2, 16, rng);
    Vec x(2);
    for (int i = 0; i < 2; ++i) x[i] = rng.uniform(-2.5, 2.5);
    TransportRay ray;
    try {
      ray = u.transport_ray(x);
    } catch (const TieError&) {
      continue;
    } catch (const AtCenterError&) {
      continue;
    }
    const double maxlen = 20.0;
    const double scanned = testing::scan_ray_end(u, x, ray.direction, 1e-4, maxlen);
    if (ray.is_infinite()) {
      CHECK(std::isinf(scanned));
    } else if (ray.upper_offset < maxlen - 1.0) {
      CHECK(std::abs(scanned - ray.upper_offset) <= 1e-3);
    }
    ++tested;
  }
}

TEST_CASE("u switches funnel at the upper endpoint") {
  RngStream rng(14);
  int tested = 0;
  while (tested < 25) {
    const MinFunnel u = random_funnel(3, 12, rng);
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-2.5, 2.5);
    try {
      const auto ray = u.transport_ray(x);
      if (ray.is_infinite()) continue;
      const Vec top = ray.upper();
      // value through the active funnel equals the min over the others there
      const double via_m =
          (top - u.centers().row(ray.funnel_index).transpose()).norm() +
          u.offsets()[ray.funnel_index];
      double other = std::numeric_limits<double>::infinity();
      for (int n = 0; n < u.size(); ++n) {
        if (n == ray.funnel_index) continue;
        other = std::min(other,
                         (top - u.centers().row(n).transpose()).norm() + u.offsets()[n]);
      }
      CHECK(std::abs(via_m - other) < 1e-7);
      ++tested;
    } catch (const TieError&) {
    } catch (const AtCenterError&) {
    }
  }
}

TEST_CASE("affine descent along the ray") {
  RngStream rng(15);
  int tested = 0;
  while (tested < 50) {
    const MinFunnel u = random_funnel(4, 8, rng);
    Vec x(4);
    for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-2.5, 2.5);
    try {
      const auto ray = u.transport_ray(x);
      const double ux = u.eval(x);
      const double reach = (x - ray.lower).norm();
      for (double frac : {0.1, 0.5, 0.9}) {
        const double t = frac * reach;
        CHECK(u.eval(x - t * ray.direction) == doctest::Approx(ux - t).epsilon(1e-9));
      }
      ++tested;
    } catch (const TieError&) {
    } catch (const AtCenterError&) {
    }
  }
}

TEST_CASE("1-Lipschitz property on random point pairs") {
  RngStream rng(16);
  const MinFunnel u = random_funnel(4, 16, rng);
  for (int i = 0; i < 2000; ++i) {
    Vec x(4), y(4);
    for (int j = 0; j < 4; ++j) {
      x[j] = rng.uniform(-4, 4);
      y[j] = rng.uniform(-4, 4);
    }
    CHECK(std::abs(u.eval(x) - u.eval(y)) <= (x - y).norm() * (1 + 1e-12) + 1e-12);
  }
}

TEST_CASE("truncate_ray clips to the box") {
  {
    const auto ray = single_funnel_2d().transport_ray(vec2(1, 0));
    const auto [x0, x1] = truncate_ray(ray, 2.5);
    CHECK(x0[0] == doctest::Approx(0.0));
    CHECK(x1[0] == doctest::Approx(2.5));
    CHECK(x1[1] == doctest::Approx(0.0));
  }
  {
    const auto ray = two_funnels_1d().transport_ray(vec1(-0.5));
    const auto [x0, x1] = truncate_ray(ray, 2.5);
    CHECK(x0[0] == doctest::Approx(-1.0));
    CHECK(x1[0] == doctest::Approx(0.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(
      truncate_ray(single_funnel_2d().transport_ray(vec2(1, 0)), 0.5),
      OutOfBoxError);
}

TEST_CASE("truncated segments stay in the box and on the line") {
  RngStream rng(17);
  int tested = 0;
  while (tested < 50) {
    const MinFunnel u = random_funnel(4, 8, rng);
    Vec x(4);
    for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-2.5, 2.5);
    try {
      const auto ray = u.transport_ray(x);
      const auto [x0, x1] = truncate_ray(ray, 2.5);
      CHECK((x0.array().abs() <= 2.5 + 1e-10).all());
      CHECK((x1.array().abs() <= 2.5 + 1e-10).all());
      // collinearity with the ray direction
      const Vec d0 = x - x0, d1 = x1 - x;
      if (d0.norm() > 1e-12)
        CHECK((d0 / d0.norm() - ray.direction).norm() < 1e-10);
      if (d1.norm() > 1e-12)
        CHECK((d1 / d1.norm() - ray.direction).norm() < 1e-10);
      ++tested;
    } catch (const TieError&) {
    } catch (const AtCenterError&) {
    } catch (const DegenerateRayError&) {
    }
  }
}

TEST_CASE("build_from_cover basics") {
  Mat pt(1, 2);
  pt << 0.4, 0.6;
  Vec val(1);
  val << 1.25;
  const MinFunnel u = build_from_cover(pt, val);
  CHECK(u.eval(vec2(0.4, 0.6)) == doctest::Approx(1.25));
  CHECK(u.eval(vec2(1.4, 0.6)) == doctest::Approx(2.25));

  Mat bad(2, 2);
  bad << 0, 0, 1, 0;
  Vec badval(2);
  badval << 0, 2.0;  // |dv| = 2 > dist = 1
  CHECK_THROWS_AS(build_from_cover(bad, badval), LipschitzViolationError);
}

TEST_CASE("cover approximation error is bounded by twice the radius") {
  // f(x) = ||x - z|| on [0,1]^2, grid with covering radius h
  const Vec z = vec2(0.313, 0.731);
  auto f = [&](const Vec& x) { return (x - z).norm(); };
  const double h = 0.1;
  const double spacing = h * std::sqrt(2.0);  // covering radius = spacing/sqrt(2) = h
  const int per_side = static_cast<int>(std::ceil(1.0 / spacing)) + 1;
  Mat points(per_side * per_side, 2);
  Vec values(per_side * per_side);
  int k = 0;
  for (int i = 0; i < per_side; ++i) {
    for (int j = 0; j < per_side; ++j) {
      points(k, 0) = std::min(1.0, i * spacing);
      points(k, 1) = std::min(1.0, j * spacing);
      values[k] = f(points.row(k).transpose());
      ++k;
    }
  }
  const MinFunnel u = build_from_cover(points, values);
  double worst = 0.0;
  for (double x = 0; x <= 1.0001; x += 0.01) {
    for (double y = 0; y <= 1.0001; y += 0.01) {
      const Vec q = vec2(std::min(x, 1.0), std::min(y, 1.0));
      const double uu = u.eval(q), ff = f(q);
      CHECK(uu >= ff - 1e-12);  // u upper-bounds f everywhere
      worst = std::max(worst, std::abs(uu - ff));
    }
  }
  CHECK(worst <= 2 * h + 1e-9);
}
