#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>

#include "w1bench/errors.hpp"

namespace w1bench {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One (solver, pair) evaluation row. cos and l2 compare the recovered
// gradient field against the ground truth in L2(P), estimated on samples
// from the first marginal fed to the solver.
struct EvalReport {
  std::string solver;
  int dim = 0;
  int n_funnels = 0;
  double p = 0;
  std::uint64_t seed = 0;
  double cos = 0;
  double cos_se = 0;
  double l2 = 0;
  double l2_se = 0;
  double w1_hat = 0;
  double w1_true = 0;
  double w1_true_se = 0;
  double dev_pct = 0;
  int n_samples = 0;
  double wall_time_s = 0;
};

// Monte Carlo estimate of <ghat, gstar> / (||ghat|| * ||gstar||) in L2(P).
// Rows are per-sample gradients. Throws ZeroFieldError if either field is
// identically zero.
double cos_metric(const Mat& ghat, const Mat& gstar);

// Mean over samples of ||ghat_i - gstar_i||^2.
double l2_metric(const Mat& ghat, const Mat& gstar);

// sqrt(mean ||g_i||^2): the L2(P) norm estimate entering the cos identity.
double field_l2_norm(const Mat& g);

struct Deviation {
  double dev_pct;
  std::string band;  // green / lime / orange / red
};

// dev = 100 * |w1_true - w1_hat| / w1_true with the table color bands
// (dev < 15, [15,30), [30,50), >= 50).
Deviation w1_deviation(double w1_hat, double w1_true);

// Shard-based standard error of a metric: the metric is recomputed on
// `shards` disjoint sample blocks and the spread of the block values gives
// the error bar. Summation is sequential, so results are deterministic.
double shard_stderr(const Mat& ghat, const Mat& gstar, int shards,
                    double (*metric)(const Mat&, const Mat&));

std::string csv_header();
std::string to_csv_row(const EvalReport& r);

}  // namespace w1bench
