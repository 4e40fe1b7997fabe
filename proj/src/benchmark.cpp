#include "w1bench/benchmark.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace w1bench {

namespace {

using nlohmann::json;

Vec uniform_box_sample(int dim, double B, RngStream& rng) {
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = rng.uniform(-B, B);
  return x;
}

}  // namespace

BenchmarkPair::BenchmarkPair(MinFunnel u, double box_halfwidth, double p,
                             BaseDistribution base, Orientation orientation,
                             std::uint64_t seed)
    : u_(std::move(u)),
      box_(box_halfwidth),
      p_(p),
      base_(std::move(base)),
      orientation_(orientation),
      seed_(seed) {
  if (box_ <= 0.0) throw ConstructionError("box halfwidth must be positive");
  if (p_ <= 1.0) throw ConstructionError("power exponent must satisfy p > 1");
}

Vec BenchmarkPair::sample_base(RngStream& rng) const {
  if (base_.kind == BaseDistribution::Kind::UniformBox)
    return uniform_box_sample(dim(), box_, rng);

  long attempts = 0;
  for (;;) {
    ++attempts;
    Vec x = base_.source ? base_.source(rng) : uniform_box_sample(dim(), box_, rng);
    for (int i = 0; i < dim(); ++i) x[i] += base_.sigma * rng.normal();
    if ((x.array().abs() <= box_).all()) return x;
    // 99% rejection guard
    if (attempts >= 1000)
      throw SamplerError("truncated sampler rejected more than 99% of draws");
  }
}

Mat BenchmarkPair::sample_base_batch(int n, RngStream& rng) const {
  Mat X(n, dim());
  for (int i = 0; i < n; ++i) X.row(i) = sample_base(rng).transpose();
  return X;
}

MapResult BenchmarkPair::map_T_ex(const Vec& x) const {
  if ((x.array().abs() > box_ + 1e-12).any())
    throw OutOfBoxError("map_T query outside the box");
  try {
    const auto [x0, x1] = truncate_ray(u_.transport_ray(x), box_);
    const double len = (x1 - x0).norm();
    const double t = (x - x0).norm() / len;
    return {x0 + std::pow(t, p_) * (x1 - x0), false};
  } catch (const TieError&) {
  } catch (const AtCenterError&) {
  } catch (const DegenerateRayError&) {
  }
  return {x, true};
}

MapResult BenchmarkPair::map_T_inverse_ex(const Vec& y) const {
  if ((y.array().abs() > box_ + 1e-12).any())
    throw OutOfBoxError("map_T_inverse query outside the box");
  try {
    const auto [x0, x1] = truncate_ray(u_.transport_ray(y), box_);
    const double len = (x1 - x0).norm();
    const double s = (y - x0).norm() / len;
    return {x0 + std::pow(s, 1.0 / p_) * (x1 - x0), false};
  } catch (const TieError&) {
  } catch (const AtCenterError&) {
  } catch (const DegenerateRayError&) {
  }
  return {y, true};
}

Mat BenchmarkPair::sample_first(int n, RngStream& rng) const {
  if (orientation_ == Orientation::Forward) return sample_base_batch(n, rng);
  Mat Y(n, dim());
  for (int i = 0; i < n; ++i) Y.row(i) = map_T(sample_base(rng)).transpose();
  return Y;
}

Mat BenchmarkPair::sample_second(int n, RngStream& rng) const {
  if (orientation_ == Orientation::Reversed) return sample_base_batch(n, rng);
  Mat Y(n, dim());
  for (int i = 0; i < n; ++i) Y.row(i) = map_T(sample_base(rng)).transpose();
  return Y;
}

std::pair<Mat, Mat> BenchmarkPair::sample(int n, RngStream& rng) const {
  if (n < 1) throw SamplerError("batch size must be >= 1");
  Mat X = sample_first(n, rng);
  Mat Y = sample_second(n, rng);
  return {std::move(X), std::move(Y)};
}

Vec GroundTruth::grad_at(const Vec& x) const {
  if (pair_.orientation() == Orientation::Forward) return pair_.funnel().grad(x);
  return -pair_.funnel().grad(x);
}

Vec GroundTruth::map_at(const Vec& x) const {
  if (pair_.orientation() == Orientation::Forward) return pair_.map_T(x);
  return pair_.map_T_inverse_ex(x).y;
}

std::pair<Mat, Mat> GroundTruth::sample_with_grad(int n, RngStream& rng) const {
  Mat X(n, pair_.dim()), G(n, pair_.dim());
  long attempts = 0;
  int i = 0;
  while (i < n) {
    ++attempts;
    if (attempts > 100L * n + 1000)
      throw SamplerError("ground-truth gradient rejected more than 99% of draws");
    Vec x = pair_.sample_first(1, rng).row(0).transpose();
    try {
      Vec g = grad_at(x);
      X.row(i) = x.transpose();
      G.row(i) = g.transpose();
      ++i;
    } catch (const TieError&) {
    } catch (const AtCenterError&) {
    }
  }
  return {std::move(X), std::move(G)};
}

BenchmarkPair generate_pair(int dim, int n_funnels, double box_halfwidth, double p,
                            std::uint64_t seed, Orientation orientation) {
  if (dim < 1) throw ConstructionError("dimension must be >= 1");
  if (n_funnels < 1) throw ConstructionError("need at least one funnel");
  RngStream rng(seed, /*stream_id=*/0x67656e /* "gen" */);
  Mat centers(n_funnels, dim);
  for (int i = 0; i < n_funnels; ++i)
    for (int j = 0; j < dim; ++j) centers(i, j) = rng.uniform(-box_halfwidth, box_halfwidth);

  const double offset_sigma = std::sqrt(0.1);
  constexpr int kMaxRetries = 100;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    Vec offsets(n_funnels);
    for (int i = 0; i < n_funnels; ++i) offsets[i] = rng.normal(0.0, offset_sigma);
    try {
      MinFunnel u(centers, offsets);
      return BenchmarkPair(std::move(u), box_halfwidth, p, BaseDistribution::uniform_box(),
                           orientation, seed);
    } catch (const NonDegeneracyError&) {
      // redraw offsets
    }
  }
  throw ConstructionError("could not draw non-degenerate funnel offsets");
}

GroundTruth ground_truth(const BenchmarkPair& pair, int n_mc, RngStream& rng) {
  if (n_mc < 2) throw ConstructionError("ground truth needs n_mc >= 2");
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    const Vec x = pair.sample_base(rng);
    const double c = (x - pair.map_T(x)).norm();
    sum += c;
    sumsq += c * c;
  }
  const double mean = sum / n_mc;
  const double var = std::max(0.0, (sumsq - n_mc * mean * mean) / (n_mc - 1));
  return GroundTruth(pair, mean, std::sqrt(var / n_mc));
}

void save_pair(const BenchmarkPair& pair, const std::string& path) {
  json j;
  j["version"] = 1;
  j["dim"] = pair.dim();
  j["n_funnels"] = pair.funnel().size();
  std::vector<std::vector<double>> centers(pair.funnel().size());
  for (int i = 0; i < pair.funnel().size(); ++i) {
    centers[i].assign(pair.funnel().centers().row(i).begin(),
                      pair.funnel().centers().row(i).end());
  }
  j["centers"] = centers;
  j["offsets"] = std::vector<double>(pair.funnel().offsets().begin(),
                                     pair.funnel().offsets().end());
  j["box_halfwidth"] = pair.box_halfwidth();
  j["p"] = pair.power();
  j["base"]["kind"] = pair.base().kind == BaseDistribution::Kind::UniformBox
                          ? "uniform_box"
                          : "truncated_noisy";
  j["base"]["params"] = json::object();
  if (pair.base().kind == BaseDistribution::Kind::TruncatedNoisy)
    j["base"]["params"]["sigma"] = pair.base().sigma;
  j["orientation"] = pair.orientation() == Orientation::Forward ? "forward" : "reversed";
  j["seed"] = pair.seed();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

BenchmarkPair load_pair(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed pair file " + path + ": " + e.what());
  }
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != 1) {
    throw SchemaVersionError("unsupported pair file version in " + path);
  }
  const int dim = j.at("dim").get<int>();
  const int n = j.at("n_funnels").get<int>();
  Mat centers(n, dim);
  const auto& rows = j.at("centers");
  if (static_cast<int>(rows.size()) != n)
    throw std::runtime_error("centers row count mismatch in " + path);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k) centers(i, k) = rows[i][k].get<double>();
  Vec offsets(n);
  for (int i = 0; i < n; ++i) offsets[i] = j.at("offsets")[i].get<double>();

  BaseDistribution base;
  const std::string kind = j.at("base").at("kind").get<std::string>();
  if (kind == "uniform_box") {
    base = BaseDistribution::uniform_box();
  } else if (kind == "truncated_noisy") {
    base = BaseDistribution::truncated_noisy(
        j.at("base").at("params").at("sigma").get<double>());
  } else {
    throw std::runtime_error("unknown base distribution kind: " + kind);
  }

  const std::string orient = j.at("orientation").get<std::string>();
  if (orient != "forward" && orient != "reversed")
    throw std::runtime_error("unknown orientation: " + orient);

  try {
    MinFunnel u(std::move(centers), std::move(offsets));
    return BenchmarkPair(std::move(u), j.at("box_halfwidth").get<double>(),
                         j.at("p").get<double>(), std::move(base),
                         orient == "forward" ? Orientation::Forward : Orientation::Reversed,
                         j.at("seed").get<std::uint64_t>());
  } catch (const NonDegeneracyError& e) {
    throw ConstructionError(std::string("pair file holds a degenerate funnel: ") + e.what());
  }
}

}  // namespace w1bench
