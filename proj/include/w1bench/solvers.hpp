#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "w1bench/benchmark.hpp"
#include "w1bench/metrics.hpp"
#include "w1bench/nn.hpp"

namespace w1bench {

enum class SolverKind { WC, GP, LP, SN, SO, LS, MMB, MM, MMR, DOT };

std::string solver_name(SolverKind kind);
std::optional<SolverKind> solver_from_name(const std::string& name);
std::vector<SolverKind> all_solvers();

// Hyperparameters. Desk scale (default) runs the published schedules at a
// quarter of the iterations with 64-wide hidden layers for CPU budgets;
// full scale restores the complete schedule and the default widths.
struct SolverConfig {
  SolverKind kind = SolverKind::GP;
  int iterations = 0;
  int batch_size = 256;
  double lr = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  int hidden_width = 64;  // 0 = default widths [max(2D,128), max(2D,128), max(D,128)]

  double clip_c = 0.04;  // WC
  double lambda = 10.0;  // GP / LP
  int power_iters = 5;   // SN
  double eps = 0.01;     // LS
  int inner_steps = 12;  // MM / MM:R
  int dot_batch = 1024;  // DOT

  int eval_batch = 8192;  // 2^13 readout batch for the W1 estimate
  int log_every = 1;

  static SolverConfig desk(SolverKind kind);
  static SolverConfig full(SolverKind kind);
};

struct LogEntry {
  long iter = 0;
  double loss = 0;
  double wall_ms = 0;
};

// Training divergence (NaN/Inf loss or exploding parameters); carries the
// partial training log.
struct TrainingDiverged : DivergenceError {
  TrainingDiverged(const std::string& msg, std::vector<LogEntry> log)
      : DivergenceError(msg), partial_log(std::move(log)) {}
  std::vector<LogEntry> partial_log;
};

// What a fitted solver exposes: a gradient-field oracle on the first
// marginal, a W1 estimate, and whatever potentials/movers were trained.
struct SolverOutput {
  SolverKind kind = SolverKind::GP;
  double w1_estimate = 0;
  double w1_saddle = std::numeric_limits<double>::quiet_NaN();  // MM only
  std::vector<LogEntry> log;
  double wall_time_s = 0;

  std::optional<nn::DenseNet> f_net;      // main potential
  std::optional<nn::DenseNet> g_net;      // second potential (LS, MM:R)
  std::optional<nn::DenseNet> mover_net;  // residual mover (MM, MM:R)
  Mat dot_X, dot_Y;                       // DOT matched batch, row-aligned
  mutable long zero_direction_warnings = 0;

  // Overrides the trained oracle when set (ground-truth pseudo-solver,
  // hand-built fields in tests).
  std::function<Mat(const Mat&)> custom_field;

  Mat grad_field(const Mat& X) const;
  Vec potential(const Mat& X) const;  // f values (or -g for MM:R)
};

// Source of (first, second) marginal batches as seen by a solver.
class PairSampler {
 public:
  virtual ~PairSampler() = default;
  virtual int dim() const = 0;
  virtual std::pair<Mat, Mat> sample(int n, RngStream& rng) const = 0;
};

class BenchmarkSampler final : public PairSampler {
 public:
  explicit BenchmarkSampler(BenchmarkPair pair) : pair_(std::move(pair)) {}
  int dim() const override { return pair_.dim(); }
  std::pair<Mat, Mat> sample(int n, RngStream& rng) const override {
    return pair_.sample(n, rng);
  }
  const BenchmarkPair& pair() const { return pair_; }

 private:
  BenchmarkPair pair_;
};

// Arbitrary marginals for tests.
class FunctionSampler final : public PairSampler {
 public:
  using Fn = std::function<Mat(int, RngStream&)>;
  FunctionSampler(int dim, Fn first, Fn second)
      : dim_(dim), first_(std::move(first)), second_(std::move(second)) {}
  int dim() const override { return dim_; }
  std::pair<Mat, Mat> sample(int n, RngStream& rng) const override {
    return {first_(n, rng), second_(n, rng)};
  }

 private:
  int dim_;
  Fn first_, second_;
};

SolverOutput fit_wc(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng);
SolverOutput fit_gp(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng);
SolverOutput fit_lp(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng);
SolverOutput fit_sn(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng);
SolverOutput fit_so(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng);
SolverOutput fit_ls(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng);
SolverOutput fit_mmb(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng);
SolverOutput fit_mm(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng);
SolverOutput fit_mmr(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng);
SolverOutput fit_dot(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng);

SolverOutput fit(SolverKind kind, const PairSampler& sampler, const SolverConfig& cfg,
                 RngStream& rng);

// (x - T(x)) / ||x - T(x)|| rowwise; rows with ||x - T(x)|| < 1e-9 become
// zero and are counted in *zero_warnings.
Mat grad_from_map(const Mat& X, const Mat& TX, long* zero_warnings = nullptr);

// min over batch rows x of ||x - y|| - f(x), with the argmin index.
std::pair<double, int> batch_c_transform(const Mat& X, const Vec& fX, const Vec& y);

// Metrics for one run against ground truth on n_eval first-marginal samples.
EvalReport evaluate(const SolverOutput& output, const GroundTruth& truth, int n_eval,
                    RngStream& rng);

// Config files mirror SolverConfig: {"kind": "gp", "scale": "desk"|"full",
// optional overrides...}. The canonical dump feeds the config hash embedded
// in run artifacts.
SolverConfig load_solver_config(const std::string& path);
void save_solver_config(const SolverConfig& cfg, const std::string& path);
std::string config_canonical_json(const SolverConfig& cfg);
std::uint64_t config_hash(const SolverConfig& cfg);

}  // namespace w1bench
