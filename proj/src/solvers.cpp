#include "w1bench/solvers.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "w1bench/assignment.hpp"

namespace w1bench {

namespace {

using nn::Activation;
using nn::AdamConfig;
using nn::AdamState;
using nn::Constraint;
using nn::DenseNet;
using nn::ForwardCache;
using nn::ParamGrads;
using nn::PenaltyMode;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

DenseNet make_net(int in, int out, const SolverConfig& cfg, Activation act,
                  Constraint con, RngStream& rng) {
  std::vector<int> widths;
  if (cfg.hidden_width > 0) {
    widths = {in, cfg.hidden_width, cfg.hidden_width, cfg.hidden_width, out};
  } else {
    widths = DenseNet::default_widths(in, out);
  }
  return DenseNet(widths, act, con, cfg.power_iters, rng);
}

// Mover nets start as the identity map: H(y) = y + net(y) with a zeroed
// output layer.
DenseNet make_mover(int dim, const SolverConfig& cfg, RngStream& rng) {
  DenseNet net = make_net(dim, dim, cfg, Activation::ReLU, Constraint::None, rng);
  net.layers().back().W.setZero();
  net.layers().back().b.setZero();
  return net;
}

AdamConfig adam_config(const SolverConfig& cfg) {
  return {cfg.lr, cfg.beta1, cfg.beta2, 1e-8};
}

void check_divergence(double loss, const DenseNet& net, const std::vector<LogEntry>& log) {
  if (!std::isfinite(loss))
    throw TrainingDiverged("training loss is not finite", log);
  if (net.param_norm() > 1e8)
    throw TrainingDiverged("parameter norm exceeded 1e8", log);
}

double mean_output(const DenseNet& net, const Mat& X) {
  return net.forward(X).col(0).mean();
}

double two_term_estimate(const DenseNet& f, const PairSampler& sampler, int n,
                         RngStream& rng) {
  const auto [X, Y] = sampler.sample(n, rng);
  return mean_output(f, X) - mean_output(f, Y);
}

// Single-potential dual ascent on mean f(X) - mean f(Y), optionally with a
// gradient/Lipschitz penalty on interpolation points, optionally with a
// projection (clip / spectral norm / orthonormalization) after each step.
SolverOutput fit_single_potential(const PairSampler& sampler, const SolverConfig& cfg,
                                  RngStream& rng, Activation act, Constraint con,
                                  std::optional<PenaltyMode> penalty,
                                  const std::function<void(DenseNet&)>& post_step) {
  const auto t0 = Clock::now();
  const int D = sampler.dim();
  DenseNet f = make_net(D, 1, cfg, act, con, rng);
  if (post_step) post_step(f);
  AdamState adam(f, adam_config(cfg));

  SolverOutput out;
  out.kind = cfg.kind;
  const int n = cfg.batch_size;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const auto [X, Y] = sampler.sample(n, rng);
    Mat XY(2 * n, D);
    XY << X, Y;
    ForwardCache cache;
    const Mat vals = f.forward(XY, &cache);
    const double obj = vals.col(0).head(n).mean() - vals.col(0).tail(n).mean();
    Mat dOut(2 * n, 1);
    dOut.col(0).head(n).setConstant(1.0 / n);
    dOut.col(0).tail(n).setConstant(-1.0 / n);
    ParamGrads grads = f.backward(cache, dOut);

    double loss = obj;
    if (penalty) {
      Mat R(n, D);
      for (int i = 0; i < n; ++i) {
        const double t = rng.uniform01();
        R.row(i) = t * X.row(i) + (1.0 - t) * Y.row(i);
      }
      const auto pen = nn::penalty_grad(f, R, *penalty);
      loss = obj - cfg.lambda * pen.value;
      grads.add_scaled(pen.grads, -cfg.lambda);
    }

    grads.scale(-1.0);  // ascent
    adam.step(f, grads);
    if (post_step) post_step(f);

    if (iter % cfg.log_every == 0 || iter + 1 == cfg.iterations)
      out.log.push_back({iter, loss, elapsed_ms(t0)});
    check_divergence(loss, f, out.log);
  }

  out.w1_estimate = two_term_estimate(f, sampler, cfg.eval_batch, rng);
  out.f_net = std::move(f);
  out.wall_time_s = elapsed_ms(t0) / 1000.0;
  return out;
}

int nearest_row(const Mat& X, const Eigen::RowVectorXd& q) {
  int best = 0;
  double bestd = (X.row(0) - q).squaredNorm();
  for (int i = 1; i < X.rows(); ++i) {
    const double d = (X.row(i) - q).squaredNorm();
    if (d < bestd) {
      bestd = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

std::string solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::WC: return "wc";
    case SolverKind::GP: return "gp";
    case SolverKind::LP: return "lp";
    case SolverKind::SN: return "sn";
    case SolverKind::SO: return "so";
    case SolverKind::LS: return "ls";
    case SolverKind::MMB: return "mmb";
    case SolverKind::MM: return "mm";
    case SolverKind::MMR: return "mmr";
    case SolverKind::DOT: return "dot";
  }
  return "?";
}

std::optional<SolverKind> solver_from_name(const std::string& name) {
  for (SolverKind k : all_solvers())
    if (solver_name(k) == name) return k;
  return std::nullopt;
}

std::vector<SolverKind> all_solvers() {
  return {SolverKind::WC,  SolverKind::GP, SolverKind::LP, SolverKind::SN,
          SolverKind::SO,  SolverKind::LS, SolverKind::MMB, SolverKind::MM,
          SolverKind::MMR, SolverKind::DOT};
}

SolverConfig SolverConfig::desk(SolverKind kind) {
  SolverConfig cfg;
  cfg.kind = kind;
  cfg.hidden_width = 64;
  cfg.batch_size = 256;
  switch (kind) {
    case SolverKind::WC: cfg.iterations = 1250; break;
    case SolverKind::GP: cfg.iterations = 10000; break;
    case SolverKind::LP: cfg.iterations = 10000; break;
    case SolverKind::SN: cfg.iterations = 1250; break;
    case SolverKind::SO: cfg.iterations = 3750; break;
    case SolverKind::LS: cfg.iterations = 2500; break;
    case SolverKind::MMB: cfg.iterations = 3750; break;
    case SolverKind::MM: cfg.iterations = 3750; break;
    case SolverKind::MMR: cfg.iterations = 3750; break;
    case SolverKind::DOT: cfg.iterations = 0; break;
  }
  return cfg;
}

SolverConfig SolverConfig::full(SolverKind kind) {
  SolverConfig cfg;
  cfg.kind = kind;
  cfg.hidden_width = 0;
  cfg.batch_size = 1024;
  switch (kind) {
    case SolverKind::WC: cfg.iterations = 5000; break;
    case SolverKind::GP: cfg.iterations = 40000; break;
    case SolverKind::LP: cfg.iterations = 40000; break;
    case SolverKind::SN: cfg.iterations = 5000; break;
    case SolverKind::SO: cfg.iterations = 15000; break;
    case SolverKind::LS: cfg.iterations = 10000; break;
    case SolverKind::MMB: cfg.iterations = 15000; break;
    case SolverKind::MM: cfg.iterations = 15000; break;
    case SolverKind::MMR: cfg.iterations = 15000; break;
    case SolverKind::DOT: cfg.iterations = 0; break;
  }
  return cfg;
}

Mat SolverOutput::grad_field(const Mat& X) const {
  if (custom_field) return custom_field(X);
  if (kind == SolverKind::MMR) {
    if (!mover_net) throw std::runtime_error("MM:R output without a mover");
    Mat TX = X + mover_net->forward(X);
    long warn = 0;
    Mat G = grad_from_map(X, TX, &warn);
    zero_direction_warnings += warn;
    return G;
  }
  if (kind == SolverKind::DOT) {
    if (dot_X.rows() == 0) throw std::runtime_error("DOT output without a batch");
    Mat G(X.rows(), X.cols());
    for (int i = 0; i < X.rows(); ++i) {
      const int j = nearest_row(dot_X, X.row(i));
      Eigen::RowVectorXd diff = dot_X.row(j) - dot_Y.row(j);
      const double norm = diff.norm();
      if (norm < 1e-9) {
        ++zero_direction_warnings;
        G.row(i).setZero();
      } else {
        G.row(i) = diff / norm;
      }
    }
    return G;
  }
  if (!f_net) throw std::runtime_error("solver output without a potential");
  ForwardCache cache;
  f_net->forward(X, &cache);
  return f_net->grad_input(cache);
}

Vec SolverOutput::potential(const Mat& X) const {
  if (f_net) return f_net->forward(X).col(0);
  if (kind == SolverKind::MMR && g_net) return -g_net->forward(X).col(0);
  throw std::runtime_error("no potential available for this solver output");
}

SolverOutput fit_wc(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng) {
  if (cfg.clip_c <= 0) throw ConstructionError("weight clip bound must be positive");
  const double c = cfg.clip_c;
  return fit_single_potential(sampler, cfg, rng, Activation::ReLU, Constraint::None,
                              std::nullopt,
                              [c](DenseNet& f) { f.clip_weights(c); });
}

SolverOutput fit_gp(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng) {
  if (cfg.lambda < 0) throw ConstructionError("penalty weight must be non-negative");
  return fit_single_potential(sampler, cfg, rng, Activation::ReLU, Constraint::None,
                              PenaltyMode::GP, nullptr);
}

SolverOutput fit_lp(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng) {
  if (cfg.lambda < 0) throw ConstructionError("penalty weight must be non-negative");
  return fit_single_potential(sampler, cfg, rng, Activation::ReLU, Constraint::None,
                              PenaltyMode::LP, nullptr);
}

SolverOutput fit_sn(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng) {
  return fit_single_potential(sampler, cfg, rng, Activation::ReLU,
                              Constraint::SpectralNorm, std::nullopt,
                              [](DenseNet& f) { f.spectral_normalize(); });
}

SolverOutput fit_so(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng) {
  return fit_single_potential(sampler, cfg, rng, Activation::FullSort,
                              Constraint::Orthonormal, std::nullopt,
                              [](DenseNet& f) { f.orthonormalize(); });
}

SolverOutput fit_ls(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng) {
  const auto t0 = Clock::now();
  const int D = sampler.dim();
  const int n = cfg.batch_size;
  DenseNet f = make_net(D, 1, cfg, Activation::ReLU, Constraint::None, rng);
  DenseNet g = make_net(D, 1, cfg, Activation::ReLU, Constraint::None, rng);
  AdamState adam_f(f, adam_config(cfg)), adam_g(g, adam_config(cfg));

  SolverOutput out;
  out.kind = SolverKind::LS;
  const double quarter_eps = 1.0 / (4.0 * cfg.eps);
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    auto [X, Y] = sampler.sample(n, rng);
    ForwardCache cf, cg;
    const Mat fX = f.forward(X, &cf);
    const Mat gY = g.forward(Y, &cg);

    double obj = fX.col(0).mean() + gY.col(0).mean();
    Mat dF(n, 1), dG(n, 1);
    double pen = 0;
    for (int i = 0; i < n; ++i) {
      const double viol =
          std::max(0.0, fX(i, 0) + gY(i, 0) - (X.row(i) - Y.row(i)).norm());
      pen += viol * viol / n;
      const double dpen = quarter_eps * 2.0 * viol / n;
      dF(i, 0) = 1.0 / n - dpen;
      dG(i, 0) = 1.0 / n - dpen;
    }
    const double loss = obj - quarter_eps * pen;

    ParamGrads gf = f.backward(cf, dF);
    ParamGrads gg = g.backward(cg, dG);
    gf.scale(-1.0);
    gg.scale(-1.0);
    adam_f.step(f, gf);
    adam_g.step(g, gg);

    if (iter % cfg.log_every == 0 || iter + 1 == cfg.iterations)
      out.log.push_back({iter, loss, elapsed_ms(t0)});
    check_divergence(loss, f, out.log);
    check_divergence(loss, g, out.log);
  }

  {
    const auto [X, Y] = sampler.sample(cfg.eval_batch, rng);
    out.w1_estimate = mean_output(f, X) - mean_output(g, Y);
  }
  out.f_net = std::move(f);
  out.g_net = std::move(g);
  out.wall_time_s = elapsed_ms(t0) / 1000.0;
  return out;
}

std::pair<double, int> batch_c_transform(const Mat& X, const Vec& fX, const Vec& y) {
  double best = std::numeric_limits<double>::infinity();
  int arg = -1;
  for (int i = 0; i < X.rows(); ++i) {
    const double v = (X.row(i).transpose() - y).norm() - fX[i];
    if (v < best) {
      best = v;
      arg = i;
    }
  }
  return {best, arg};
}

SolverOutput fit_mmb(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng) {
  const auto t0 = Clock::now();
  const int D = sampler.dim();
  const int n = cfg.batch_size;
  DenseNet f = make_net(D, 1, cfg, Activation::ReLU, Constraint::None, rng);
  AdamState adam(f, adam_config(cfg));

  SolverOutput out;
  out.kind = SolverKind::MMB;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    auto [X, Y] = sampler.sample(n, rng);
    ForwardCache cache;
    const Mat fX = f.forward(X, &cache);
    const Vec fvals = fX.col(0);

    // inner c-transform restricted to the current batch from the first
    // marginal; the argmin is held fixed for the gradient (envelope).
    double inner = 0;
    Mat dOut = Mat::Constant(n, 1, 1.0 / n);
    for (int j = 0; j < n; ++j) {
      const auto [val, idx] = batch_c_transform(X, fvals, Y.row(j).transpose());
      inner += val / n;
      dOut(idx, 0) -= 1.0 / n;
    }
    const double loss = fvals.mean() + inner;

    ParamGrads grads = f.backward(cache, dOut);
    grads.scale(-1.0);
    adam.step(f, grads);

    if (iter % cfg.log_every == 0 || iter + 1 == cfg.iterations)
      out.log.push_back({iter, loss, elapsed_ms(t0)});
    check_divergence(loss, f, out.log);
  }

  out.w1_estimate = two_term_estimate(f, sampler, cfg.eval_batch, rng);
  out.f_net = std::move(f);
  out.wall_time_s = elapsed_ms(t0) / 1000.0;
  return out;
}

namespace {

// Shared maximin loop: potential `phi` ascends on
//   mean phi(A) + mean [ ||M(b) - b|| - phi(M(b)) ]  (MM: A=X, b from Y)
// while the mover minimizes the bracketed term, `inner_steps` mover updates
// per potential update. MM:R swaps the roles of the marginals.
SolverOutput fit_maximin(const PairSampler& sampler, const SolverConfig& cfg,
                         RngStream& rng, bool reversed_roles) {
  const auto t0 = Clock::now();
  const int D = sampler.dim();
  const int n = cfg.batch_size;
  DenseNet phi = make_net(D, 1, cfg, Activation::ReLU, Constraint::None, rng);
  DenseNet mover = make_mover(D, cfg, rng);
  AdamState adam_phi(phi, adam_config(cfg)), adam_mover(mover, adam_config(cfg));

  SolverOutput out;
  out.kind = reversed_roles ? SolverKind::MMR : SolverKind::MM;

  auto mover_batch = [&](int m, RngStream& r) {
    auto [X, Y] = sampler.sample(m, r);
    return reversed_roles ? X : Y;
  };

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (int k = 0; k < cfg.inner_steps; ++k) {
      const Mat B = mover_batch(n, rng);
      ForwardCache cm;
      Mat MB = B + mover.forward(B, &cm);
      ForwardCache cp;
      phi.forward(MB, &cp);
      const Mat gphi = phi.grad_input(cp);

      Mat dMB(n, D);
      for (int i = 0; i < n; ++i) {
        Eigen::RowVectorXd diff = MB.row(i) - B.row(i);
        const double norm = diff.norm();
        Eigen::RowVectorXd dn =
            norm < 1e-12 ? Eigen::RowVectorXd::Zero(D).eval() : (diff / norm).eval();
        dMB.row(i) = (dn - gphi.row(i)) / n;
      }
      ParamGrads gm = mover.backward(cm, dMB);
      adam_mover.step(mover, gm);  // descend the inner term
    }

    auto [X, Y] = sampler.sample(n, rng);
    const Mat& A = reversed_roles ? Y : X;
    const Mat& B = reversed_roles ? X : Y;
    Mat MB = B + mover.forward(B);
    Mat AB(2 * n, D);
    AB << A, MB;
    ForwardCache cp;
    const Mat vals = phi.forward(AB, &cp);
    double move_cost = 0;
    for (int i = 0; i < n; ++i) move_cost += (MB.row(i) - B.row(i)).norm() / n;
    const double saddle =
        vals.col(0).head(n).mean() + move_cost - vals.col(0).tail(n).mean();

    Mat dOut(2 * n, 1);
    dOut.col(0).head(n).setConstant(1.0 / n);
    dOut.col(0).tail(n).setConstant(-1.0 / n);
    ParamGrads gp = phi.backward(cp, dOut);
    gp.scale(-1.0);
    adam_phi.step(phi, gp);

    if (iter % cfg.log_every == 0 || iter + 1 == cfg.iterations)
      out.log.push_back({iter, saddle, elapsed_ms(t0)});
    check_divergence(saddle, phi, out.log);
    check_divergence(saddle, mover, out.log);
  }

  const auto [Xe, Ye] = sampler.sample(cfg.eval_batch, rng);
  if (reversed_roles) {
    // w1 = -mean g(X) + mean g(Y)
    out.w1_estimate = -mean_output(phi, Xe) + mean_output(phi, Ye);
    out.g_net = std::move(phi);
  } else {
    out.w1_estimate = mean_output(phi, Xe) - mean_output(phi, Ye);
    {
      const Mat MB = Ye + mover.forward(Ye);
      double move_cost = 0;
      for (int i = 0; i < MB.rows(); ++i)
        move_cost += (MB.row(i) - Ye.row(i)).norm() / MB.rows();
      out.w1_saddle = mean_output(phi, Xe) + move_cost - mean_output(phi, MB);
    }
    out.f_net = std::move(phi);
  }
  out.mover_net = std::move(mover);
  out.wall_time_s = elapsed_ms(t0) / 1000.0;
  return out;
}

}  // namespace

SolverOutput fit_mm(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng) {
  return fit_maximin(sampler, cfg, rng, /*reversed_roles=*/false);
}

SolverOutput fit_mmr(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng) {
  return fit_maximin(sampler, cfg, rng, /*reversed_roles=*/true);
}

SolverOutput fit_dot(const PairSampler& sampler, const SolverConfig& cfg, RngStream& rng) {
  const auto t0 = Clock::now();
  const int n = cfg.dot_batch;
  auto [X, Y] = sampler.sample(n, rng);
  Mat cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost(i, j) = (X.row(i) - Y.row(j)).norm();
  const AssignmentResult res = solve_assignment(cost);

  SolverOutput out;
  out.kind = SolverKind::DOT;
  out.dot_X = X;
  out.dot_Y.resize(n, X.cols());
  for (int i = 0; i < n; ++i) out.dot_Y.row(i) = Y.row(res.row_to_col[i]);
  out.w1_estimate = res.cost / n;
  out.log.push_back({0, out.w1_estimate, elapsed_ms(t0)});
  out.wall_time_s = elapsed_ms(t0) / 1000.0;
  return out;
}

SolverOutput fit(SolverKind kind, const PairSampler& sampler, const SolverConfig& cfg,
                 RngStream& rng) {
  switch (kind) {
    case SolverKind::WC: return fit_wc(sampler, cfg, rng);
    case SolverKind::GP: return fit_gp(sampler, cfg, rng);
    case SolverKind::LP: return fit_lp(sampler, cfg, rng);
    case SolverKind::SN: return fit_sn(sampler, cfg, rng);
    case SolverKind::SO: return fit_so(sampler, cfg, rng);
    case SolverKind::LS: return fit_ls(sampler, cfg, rng);
    case SolverKind::MMB: return fit_mmb(sampler, cfg, rng);
    case SolverKind::MM: return fit_mm(sampler, cfg, rng);
    case SolverKind::MMR: return fit_mmr(sampler, cfg, rng);
    case SolverKind::DOT: return fit_dot(sampler, cfg, rng);
  }
  throw std::runtime_error("unknown solver kind");
}

Mat grad_from_map(const Mat& X, const Mat& TX, long* zero_warnings) {
  if (X.rows() != TX.rows() || X.cols() != TX.cols())
    throw DimensionError("grad_from_map shape mismatch");
  Mat G(X.rows(), X.cols());
  long warn = 0;
  for (int i = 0; i < X.rows(); ++i) {
    Eigen::RowVectorXd diff = X.row(i) - TX.row(i);
    const double norm = diff.norm();
    if (norm < 1e-9) {
      ++warn;
      G.row(i).setZero();
    } else {
      G.row(i) = diff / norm;
    }
  }
  if (zero_warnings) *zero_warnings += warn;
  return G;
}

namespace {

nlohmann::json config_to_json(const SolverConfig& cfg) {
  nlohmann::json j;
  j["kind"] = solver_name(cfg.kind);
  j["iterations"] = cfg.iterations;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["hidden_width"] = cfg.hidden_width;
  j["c"] = cfg.clip_c;
  j["lambda"] = cfg.lambda;
  j["power_iters"] = cfg.power_iters;
  j["eps"] = cfg.eps;
  j["inner_steps"] = cfg.inner_steps;
  j["dot_batch"] = cfg.dot_batch;
  j["eval_batch"] = cfg.eval_batch;
  j["log_every"] = cfg.log_every;
  return j;
}

}  // namespace

SolverConfig load_solver_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConstructionError("malformed solver config " + path + ": " + e.what());
  }
  const std::string name = j.at("kind").get<std::string>();
  const auto kind = solver_from_name(name);
  if (!kind) throw ConstructionError("unknown solver kind: " + name);
  const std::string scale = j.value("scale", "desk");
  SolverConfig cfg = scale == "full" ? SolverConfig::full(*kind)
                                     : SolverConfig::desk(*kind);
  if (scale != "desk" && scale != "full")
    throw ConstructionError("unknown scale: " + scale);
  if (j.contains("iterations")) cfg.iterations = j["iterations"].get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("lr")) cfg.lr = j["lr"].get<double>();
  if (j.contains("beta1")) cfg.beta1 = j["beta1"].get<double>();
  if (j.contains("beta2")) cfg.beta2 = j["beta2"].get<double>();
  if (j.contains("hidden_width")) cfg.hidden_width = j["hidden_width"].get<int>();
  if (j.contains("c")) cfg.clip_c = j["c"].get<double>();
  if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
  if (j.contains("power_iters")) cfg.power_iters = j["power_iters"].get<int>();
  if (j.contains("eps")) cfg.eps = j["eps"].get<double>();
  if (j.contains("inner_steps")) cfg.inner_steps = j["inner_steps"].get<int>();
  if (j.contains("dot_batch")) cfg.dot_batch = j["dot_batch"].get<int>();
  if (j.contains("eval_batch")) cfg.eval_batch = j["eval_batch"].get<int>();
  if (j.contains("log_every")) cfg.log_every = j["log_every"].get<int>();
  return cfg;
}

void save_solver_config(const SolverConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << config_to_json(cfg).dump(2) << "\n";
}

std::string config_canonical_json(const SolverConfig& cfg) {
  return config_to_json(cfg).dump();
}

std::uint64_t config_hash(const SolverConfig& cfg) {
  // FNV-1a over the canonical dump
  std::uint64_t h = 1469598103934665603ULL;
  for (const char ch : config_canonical_json(cfg)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  return h;
}

EvalReport evaluate(const SolverOutput& output, const GroundTruth& truth, int n_eval,
                    RngStream& rng) {
  const auto [X, Gstar] = truth.sample_with_grad(n_eval, rng);
  const Mat Ghat = output.grad_field(X);

  EvalReport r;
  r.solver = solver_name(output.kind);
  r.dim = truth.pair().dim();
  r.n_funnels = truth.pair().funnel().size();
  r.p = truth.pair().power();
  r.seed = truth.pair().seed();
  r.cos = cos_metric(Ghat, Gstar);
  r.cos_se = shard_stderr(Ghat, Gstar, 16, &cos_metric);
  r.l2 = l2_metric(Ghat, Gstar);
  r.l2_se = shard_stderr(Ghat, Gstar, 16, &l2_metric);
  r.w1_hat = output.w1_estimate;
  r.w1_true = truth.w1();
  r.w1_true_se = truth.w1_stderr();
  r.dev_pct = w1_deviation(r.w1_hat, r.w1_true).dev_pct;
  r.n_samples = n_eval;
  r.wall_time_s = output.wall_time_s;
  return r;
}

}  // namespace w1bench
