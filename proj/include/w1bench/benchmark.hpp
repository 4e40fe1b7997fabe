#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "w1bench/minfunnel.hpp"
#include "w1bench/rng.hpp"

namespace w1bench {

// Which way the pair is fed to a solver. Reversed swaps the marginals so the
// solver sees (Q, P); the optimal potential then flips sign to -u.
enum class Orientation { Forward, Reversed };

struct BaseDistribution {
  enum class Kind { UniformBox, TruncatedNoisy };

  Kind kind = Kind::UniformBox;
  double sigma = 0.0;  // axis-wise Gaussian noise for TruncatedNoisy

  // Optional raw source for TruncatedNoisy (noise is added on top, samples
  // outside the box are rejected). Defaults to uniform on the box; the
  // source itself is not persisted in pair files.
  std::function<Vec(RngStream&)> source;

  static BaseDistribution uniform_box() { return {}; }
  static BaseDistribution truncated_noisy(double sigma,
                                          std::function<Vec(RngStream&)> src = nullptr) {
    BaseDistribution b;
    b.kind = Kind::TruncatedNoisy;
    b.sigma = sigma;
    b.source = std::move(src);
    return b;
  }
};

struct MapResult {
  Vec y;
  bool identity_fallback = false;  // T(x) = x because the ray was unavailable
};

// A benchmark pair (P, Q): base distribution P on [-B, B]^D, pushforward
// Q = T#P along the truncated transport rays of u, with position t on a ray
// mapped to t^p. W1(P, Q), the OT map and the OT gradient are all known.
class BenchmarkPair {
 public:
  BenchmarkPair(MinFunnel u, double box_halfwidth, double p, BaseDistribution base,
                Orientation orientation, std::uint64_t seed);

  const MinFunnel& funnel() const { return u_; }
  double box_halfwidth() const { return box_; }
  double power() const { return p_; }
  const BaseDistribution& base() const { return base_; }
  Orientation orientation() const { return orientation_; }
  std::uint64_t seed() const { return seed_; }
  int dim() const { return u_.dim(); }

  Vec sample_base(RngStream& rng) const;
  Mat sample_base_batch(int n, RngStream& rng) const;

  // Ray-monotone map T. Position t = ||x - x0|| / ||x1 - x0|| measured from
  // the lower endpoint maps to t^p, so u(x) - u(T(x)) = ||x - T(x)||.
  // Returns x itself when the ray is unavailable (tie / center / degenerate).
  MapResult map_T_ex(const Vec& x) const;
  Vec map_T(const Vec& x) const { return map_T_ex(x).y; }

  // Inverse of T along the ray through y (t restored as t^(1/p)).
  MapResult map_T_inverse_ex(const Vec& y) const;

  // First/second marginal in solver order (Forward: (P, Q); Reversed: (Q, P)).
  Mat sample_first(int n, RngStream& rng) const;
  Mat sample_second(int n, RngStream& rng) const;
  // Two independent batches, n x D each; no matched couples.
  std::pair<Mat, Mat> sample(int n, RngStream& rng) const;

 private:
  MinFunnel u_;
  double box_;
  double p_;
  BaseDistribution base_;
  Orientation orientation_;
  std::uint64_t seed_;
};

// Monte Carlo ground truth for one pair: the OT cost with standard error
// plus the gradient/map oracles on the first marginal.
class GroundTruth {
 public:
  GroundTruth(BenchmarkPair pair, double w1, double w1_stderr)
      : pair_(std::move(pair)), w1_(w1), stderr_(w1_stderr) {}

  double w1() const { return w1_; }
  double w1_stderr() const { return stderr_; }
  const BenchmarkPair& pair() const { return pair_; }

  // +grad u(x) for Forward, -grad u(y) for Reversed. Throws the underlying
  // recoverable signals at non-differentiable points.
  Vec grad_at(const Vec& x) const;

  // OT map on the first marginal (T for Forward, T^-1 for Reversed).
  Vec map_at(const Vec& x) const;

  // n first-marginal samples together with the ground-truth gradient at
  // each; points where the gradient is unavailable are resampled.
  std::pair<Mat, Mat> sample_with_grad(int n, RngStream& rng) const;

 private:
  BenchmarkPair pair_;
  double w1_;
  double stderr_;
};

// Deterministic given the seed: a_n ~ Uniform([-B, B]^D), b_n ~ N(0, 0.1)
// (variance 0.1); offsets are redrawn on non-degeneracy violations with a
// bounded retry budget.
BenchmarkPair generate_pair(int dim, int n_funnels, double box_halfwidth, double p,
                            std::uint64_t seed,
                            Orientation orientation = Orientation::Reversed);

GroundTruth ground_truth(const BenchmarkPair& pair, int n_mc, RngStream& rng);

constexpr int kDefaultGroundTruthSamples = 1 << 16;
constexpr double kDefaultBoxHalfwidth = 2.5;
constexpr double kDefaultPower = 8.0;

void save_pair(const BenchmarkPair& pair, const std::string& path);
BenchmarkPair load_pair(const std::string& path);

}  // namespace w1bench
