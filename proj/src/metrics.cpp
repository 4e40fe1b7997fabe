#include "w1bench/metrics.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace w1bench {

namespace {

void check_shapes(const Mat& ghat, const Mat& gstar) {
  if (ghat.rows() != gstar.rows() || ghat.cols() != gstar.cols())
    throw DimensionError("gradient field shapes differ");
  if (ghat.rows() == 0) throw DimensionError("empty gradient fields");
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

double cos_metric(const Mat& ghat, const Mat& gstar) {
  check_shapes(ghat, gstar);
  double dot = 0, nh = 0, ns = 0;
  for (int i = 0; i < ghat.rows(); ++i) {
    dot += ghat.row(i).dot(gstar.row(i));
    nh += ghat.row(i).squaredNorm();
    ns += gstar.row(i).squaredNorm();
  }
  if (nh <= 0.0 || ns <= 0.0)
    throw ZeroFieldError("cos metric undefined for an all-zero field");
  return dot / std::sqrt(nh * ns);
}

double l2_metric(const Mat& ghat, const Mat& gstar) {
  check_shapes(ghat, gstar);
  double acc = 0;
  for (int i = 0; i < ghat.rows(); ++i) acc += (ghat.row(i) - gstar.row(i)).squaredNorm();
  return acc / ghat.rows();
}

double field_l2_norm(const Mat& g) {
  double acc = 0;
  for (int i = 0; i < g.rows(); ++i) acc += g.row(i).squaredNorm();
  return std::sqrt(acc / g.rows());
}

Deviation w1_deviation(double w1_hat, double w1_true) {
  const double dev = 100.0 * std::abs(w1_true - w1_hat) / w1_true;
  std::string band;
  if (dev < 15.0) band = "green";
  else if (dev < 30.0) band = "lime";
  else if (dev < 50.0) band = "orange";
  else band = "red";
  return {dev, band};
}

double shard_stderr(const Mat& ghat, const Mat& gstar, int shards,
                    double (*metric)(const Mat&, const Mat&)) {
  const int n = static_cast<int>(ghat.rows());
  shards = std::min(shards, n);
  if (shards < 2) return 0.0;
  const int block = n / shards;
  double sum = 0, sumsq = 0;
  for (int s = 0; s < shards; ++s) {
    const int lo = s * block;
    const int len = (s == shards - 1) ? n - lo : block;
    const double v = metric(ghat.middleRows(lo, len), gstar.middleRows(lo, len));
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / shards;
  const double var = std::max(0.0, (sumsq - shards * mean * mean) / (shards - 1));
  return std::sqrt(var / shards);
}

std::string csv_header() {
  return "solver,D,N,p,seed,cos,l2,w1_hat,w1_true,dev_pct,n_samples,wall_time_s";
}

std::string to_csv_row(const EvalReport& r) {
  std::ostringstream out;
  out << r.solver << ',' << r.dim << ',' << r.n_funnels << ',' << format_double(r.p)
      << ',' << r.seed << ',' << format_double(r.cos) << ',' << format_double(r.l2)
      << ',' << format_double(r.w1_hat) << ',' << format_double(r.w1_true) << ','
      << format_double(r.dev_pct) << ',' << r.n_samples << ','
      << format_double(r.wall_time_s);
  return out.str();
}

}  // namespace w1bench
