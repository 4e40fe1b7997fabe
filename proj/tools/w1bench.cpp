// w1bench: build benchmark pairs with known W1 ground truth, run dual
// solvers against them, and report gradient/cost recovery metrics.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "w1bench/benchmark.hpp"
#include "w1bench/metrics.hpp"
#include "w1bench/plots.hpp"
#include "w1bench/solvers.hpp"
#include "w1bench/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace w1bench;

namespace {

constexpr const char* kToolVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitDivergence = 4;
constexpr int kExitIo = 5;

// Distinct sub-stream ids per purpose so reruns stay reproducible.
enum StreamId : std::uint64_t {
  kStreamGroundTruth = 1,
  kStreamTraining = 2,
  kStreamEval = 3,
  kStreamPlot = 4,
};

struct RunRecord {
  std::string solver;
  SolverConfig config;
  std::uint64_t seed = 0;
  bool deterministic = false;
  double w1_estimate = 0;
  double w1_saddle = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0;
  std::string pair_file;
};

void write_training_log(const std::vector<LogEntry>& log, const fs::path& path,
                        bool deterministic) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (const auto& e : log) {
    json j;
    j["iter"] = e.iter;
    j["loss"] = e.loss;
    j["wall_ms"] = deterministic ? 0.0 : e.wall_ms;
    out << j.dump() << "\n";
  }
}

json eval_report_to_json(const EvalReport& r) {
  json j;
  j["tool_version"] = kToolVersion;
  j["solver"] = r.solver;
  j["dim"] = r.dim;
  j["n_funnels"] = r.n_funnels;
  j["p"] = r.p;
  j["seed"] = r.seed;
  j["cos"] = r.cos;
  j["cos_se"] = r.cos_se;
  j["l2"] = r.l2;
  j["l2_se"] = r.l2_se;
  j["w1_hat"] = r.w1_hat;
  j["w1_true"] = r.w1_true;
  j["w1_true_se"] = r.w1_true_se;
  j["dev_pct"] = r.dev_pct;
  j["band"] = w1_deviation(r.w1_hat, r.w1_true).band;
  j["n_samples"] = r.n_samples;
  j["wall_time_s"] = r.wall_time_s;
  return j;
}

void append_csv_row(const fs::path& csv, const EvalReport& r) {
  const bool fresh = !fs::exists(csv);
  std::ofstream out(csv, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + csv.string());
  if (fresh) out << csv_header() << "\n";
  out << to_csv_row(r) << "\n";
}

void save_dot_batch(const SolverOutput& out, const fs::path& path) {
  json j;
  std::vector<std::vector<double>> X(out.dot_X.rows()), Y(out.dot_Y.rows());
  for (int i = 0; i < out.dot_X.rows(); ++i) {
    X[i].assign(out.dot_X.row(i).begin(), out.dot_X.row(i).end());
    Y[i].assign(out.dot_Y.row(i).begin(), out.dot_Y.row(i).end());
  }
  j["X"] = X;
  j["Y"] = Y;
  std::ofstream f(path, std::ios::binary);
  f << j.dump() << "\n";
}

Mat mat_from_json(const json& rows) {
  const int n = static_cast<int>(rows.size());
  const int d = n ? static_cast<int>(rows[0].size()) : 0;
  Mat M(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) M(i, j) = rows[i][j].get<double>();
  return M;
}

// Runs one solver on one pair and persists everything under out_dir.
RunRecord do_solve(const BenchmarkPair& pair, const std::string& pair_file,
                   const SolverConfig& cfg, std::uint64_t seed, const fs::path& out_dir,
                   bool deterministic) {
  fs::create_directories(out_dir);
  BenchmarkSampler sampler(pair);

  RunRecord rec;
  rec.solver = solver_name(cfg.kind);
  rec.config = cfg;
  rec.seed = seed;
  rec.deterministic = deterministic;
  rec.pair_file = pair_file;

  SolverOutput out;
  RngStream rng(seed, kStreamTraining);
  try {
    out = fit(cfg.kind, sampler, cfg, rng);
  } catch (const TrainingDiverged& e) {
    write_training_log(e.partial_log, out_dir / "train.log.jsonl", deterministic);
    throw;
  }

  rec.w1_estimate = out.w1_estimate;
  rec.w1_saddle = out.w1_saddle;
  rec.wall_time_s = deterministic ? 0.0 : out.wall_time_s;

  write_training_log(out.log, out_dir / "train.log.jsonl", deterministic);
  json run;
  run["version"] = 1;
  run["tool_version"] = kToolVersion;
  run["solver"] = rec.solver;
  run["config"] = json::parse(config_canonical_json(cfg));
  run["config_hash"] = config_hash(cfg);
  run["seed"] = seed;
  run["deterministic"] = deterministic;
  run["pair_file"] = pair_file;
  run["w1_estimate"] = out.w1_estimate;
  if (std::isfinite(out.w1_saddle)) run["w1_saddle"] = out.w1_saddle;
  run["wall_time_s"] = rec.wall_time_s;
  json ckpt = json::object();
  if (out.f_net) {
    nn::save_checkpoint(*out.f_net, (out_dir / "f.net.json").string());
    ckpt["f"] = "f.net.json";
  }
  if (out.g_net) {
    nn::save_checkpoint(*out.g_net, (out_dir / "g.net.json").string());
    ckpt["g"] = "g.net.json";
  }
  if (out.mover_net) {
    nn::save_checkpoint(*out.mover_net, (out_dir / "mover.net.json").string());
    ckpt["mover"] = "mover.net.json";
  }
  if (out.kind == SolverKind::DOT) {
    save_dot_batch(out, out_dir / "dot.json");
    ckpt["dot"] = "dot.json";
  }
  run["checkpoints"] = ckpt;
  run["log_file"] = "train.log.jsonl";
  std::ofstream f(out_dir / "run.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write run.json");
  f << run.dump(2) << "\n";
  return rec;
}

// Ground-truth pseudo-run: the oracle itself plays the role of a solver.
RunRecord do_truth_run(const BenchmarkPair& pair, const std::string& pair_file,
                       std::uint64_t seed, const fs::path& out_dir,
                       bool deterministic) {
  fs::create_directories(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng(seed, kStreamTraining);
  const auto truth = ground_truth(pair, kDefaultGroundTruthSamples, rng);
  RunRecord rec;
  rec.solver = "truth";
  rec.seed = seed;
  rec.deterministic = deterministic;
  rec.pair_file = pair_file;
  rec.w1_estimate = truth.w1();
  rec.wall_time_s =
      deterministic
          ? 0.0
          : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json run;
  run["version"] = 1;
  run["tool_version"] = kToolVersion;
  run["solver"] = "truth";
  run["config"] = json::object();
  run["config_hash"] = 0;
  run["seed"] = seed;
  run["deterministic"] = deterministic;
  run["pair_file"] = pair_file;
  run["w1_estimate"] = truth.w1();
  run["w1_true_se"] = truth.w1_stderr();
  run["wall_time_s"] = rec.wall_time_s;
  run["checkpoints"] = json::object();
  std::ofstream f(out_dir / "run.json", std::ios::binary);
  f << run.dump(2) << "\n";
  return rec;
}

// Rebuilds the gradient-field oracle of a finished run from its artifacts.
SolverOutput load_run_output(const fs::path& run_dir, const GroundTruth& truth) {
  std::ifstream in(run_dir / "run.json", std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + (run_dir / "run.json").string());
  json run;
  in >> run;
  if (run.value("version", -1) != 1)
    throw SchemaVersionError("unsupported run.json version");

  SolverOutput out;
  out.w1_estimate = run.at("w1_estimate").get<double>();
  out.wall_time_s = run.value("wall_time_s", 0.0);
  const std::string solver = run.at("solver").get<std::string>();
  if (solver == "truth") {
    out.custom_field = [&truth](const Mat& X) {
      Mat G(X.rows(), X.cols());
      for (int i = 0; i < X.rows(); ++i)
        G.row(i) = truth.grad_at(X.row(i).transpose()).transpose();
      return G;
    };
    return out;
  }
  const auto kind = solver_from_name(solver);
  if (!kind) throw ConstructionError("unknown solver in run.json: " + solver);
  out.kind = *kind;
  const auto& ckpt = run.at("checkpoints");
  if (ckpt.contains("f"))
    out.f_net = nn::load_checkpoint((run_dir / ckpt["f"].get<std::string>()).string());
  if (ckpt.contains("g"))
    out.g_net = nn::load_checkpoint((run_dir / ckpt["g"].get<std::string>()).string());
  if (ckpt.contains("mover"))
    out.mover_net =
        nn::load_checkpoint((run_dir / ckpt["mover"].get<std::string>()).string());
  if (ckpt.contains("dot")) {
    std::ifstream df(run_dir / ckpt["dot"].get<std::string>(), std::ios::binary);
    json dj;
    df >> dj;
    out.dot_X = mat_from_json(dj.at("X"));
    out.dot_Y = mat_from_json(dj.at("Y"));
  }
  return out;
}

int run_eval(const std::string& pair_file, const std::string& run_dir_s, int samples,
             std::uint64_t eval_seed, const std::string& out_dir_s) {
  const fs::path run_dir(run_dir_s), out_dir(out_dir_s);
  if (!fs::exists(run_dir / "run.json")) {
    std::cerr << "missing run file: " << (run_dir / "run.json") << "\n";
    return kExitIo;
  }
  const auto pair = load_pair(pair_file);
  RngStream gt_rng(eval_seed, kStreamGroundTruth);
  const auto truth = ground_truth(pair, kDefaultGroundTruthSamples, gt_rng);
  const auto out = load_run_output(run_dir, truth);

  std::ifstream in(run_dir / "run.json", std::ios::binary);
  json run;
  in >> run;
  if (samples <= 0) {
    // 2^13 samples for neural solvers, the matched batch size for DOT
    samples = 8192;
    if (run.at("solver").get<std::string>() == "dot" && run.contains("config"))
      samples = run["config"].value("dot_batch", 8192);
  }

  RngStream rng(eval_seed, kStreamEval);
  EvalReport report = evaluate(out, truth, samples, rng);
  report.solver = run.at("solver").get<std::string>();
  report.seed = run.at("seed").get<std::uint64_t>();
  if (run.value("deterministic", false)) report.wall_time_s = 0.0;
  const std::uint64_t cfg_hash = run.value("config_hash", 0ULL);

  fs::create_directories(out_dir);
  append_csv_row(out_dir / "results.csv", report);
  const std::string stem = run_dir.filename().empty() ? "run" : run_dir.filename().string();
  std::ofstream jf(out_dir / (stem + ".eval.json"), std::ios::binary);
  json record = eval_report_to_json(report);
  record["config_hash"] = cfg_hash;
  jf << record.dump(2) << "\n";
  std::cout << csv_header() << "\n" << to_csv_row(report) << "\n";
  return kExitOk;
}

std::string band_cell(const json& rec) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "cos %.2f, W1 %.2f/%.2f (%s)",
                rec.at("cos").get<double>(), rec.at("w1_hat").get<double>(),
                rec.at("w1_true").get<double>(), rec.at("band").get<std::string>().c_str());
  return buf;
}

int run_report(const std::string& dir_s, const std::string& out_s) {
  const fs::path dir(dir_s);
  std::vector<fs::path> files;
  if (fs::exists(dir))
    for (const auto& ent : fs::directory_iterator(dir))
      if (ent.path().extension() == ".json" &&
          ent.path().string().ends_with(".eval.json"))
        files.push_back(ent.path());
  std::sort(files.begin(), files.end());

  // key = (D, N, solver, seed); later files win
  std::map<std::tuple<int, int, std::string, std::uint64_t>, json> latest;
  std::vector<std::string> solvers;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    json rec;
    try {
      in >> rec;
    } catch (const json::exception& e) {
      std::cerr << "skipping malformed record " << f << ": " << e.what() << "\n";
      continue;
    }
    const auto key = std::make_tuple(rec.at("dim").get<int>(),
                                     rec.at("n_funnels").get<int>(),
                                     rec.at("solver").get<std::string>(),
                                     rec.at("seed").get<std::uint64_t>());
    if (latest.count(key))
      std::cerr << "warning: duplicate evaluation for (D=" << std::get<0>(key)
                << ", N=" << std::get<1>(key) << ", " << std::get<2>(key)
                << ", seed=" << std::get<3>(key) << "); keeping the latest\n";
    latest[key] = rec;
    const std::string s = rec.at("solver").get<std::string>();
    if (std::find(solvers.begin(), solvers.end(), s) == solvers.end())
      solvers.push_back(s);
  }
  std::sort(solvers.begin(), solvers.end());

  std::map<std::pair<int, int>, std::map<std::string, json>> grid;
  for (const auto& [key, rec] : latest)
    grid[{std::get<0>(key), std::get<1>(key)}][std::get<2>(key)] = rec;

  if (out_s.ends_with(".csv")) {
    std::ostringstream csv;
    csv << "D,N";
    for (const auto& s : solvers) csv << "," << s << "_cos," << s << "_w1," << s << "_band";
    csv << "\n";
    for (const auto& [dn, row] : grid) {
      csv << dn.first << "," << dn.second;
      for (const auto& s : solvers) {
        auto it = row.find(s);
        if (it == row.end()) {
          csv << ",,,";
        } else {
          csv << "," << it->second.at("cos").get<double>() << ","
              << it->second.at("w1_hat").get<double>() << ","
              << it->second.at("band").get<std::string>();
        }
      }
      csv << "\n";
    }
    std::ofstream out(out_s, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << out_s << "\n";
      return kExitIo;
    }
    out << csv.str();
    return kExitOk;
  }

  std::ostringstream md;
  md << "# Evaluation matrix\n\n";
  if (grid.empty()) {
    md << "_no evaluation records found_\n";
  } else {
    md << "| D, N |";
    for (const auto& s : solvers) md << " " << s << " |";
    md << "\n|---|";
    for (size_t i = 0; i < solvers.size(); ++i) md << "---|";
    md << "\n";
    for (const auto& [dn, row] : grid) {
      md << "| D=" << dn.first << ", N=" << dn.second << " |";
      for (const auto& s : solvers) {
        auto it = row.find(s);
        md << " " << (it == row.end() ? "-" : band_cell(it->second)) << " |";
      }
      md << "\n";
    }
  }
  if (out_s.empty()) {
    std::cout << md.str();
  } else {
    std::ofstream out(out_s, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << out_s << "\n";
      return kExitIo;
    }
    out << md.str();
  }
  return kExitOk;
}

int worker_count() {
  if (const char* env = std::getenv("W1BENCH_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous W1 benchmark pairs and dual-solver evaluation"};
  app.require_subcommand(1);

  // --- gen ---------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate a benchmark pair");
  int g_dim = 2, g_funnels = 4;
  double g_box = kDefaultBoxHalfwidth, g_power = kDefaultPower;
  std::uint64_t g_seed = 0;
  std::string g_out = "pair.json", g_orient = "reversed";
  int g_mc = kDefaultGroundTruthSamples;
  gen->add_option("--dim", g_dim, "ambient dimension")->check(CLI::PositiveNumber);
  gen->add_option("--funnels", g_funnels, "number of funnels")->check(CLI::PositiveNumber);
  gen->add_option("--box", g_box, "box halfwidth")->check(CLI::PositiveNumber);
  gen->add_option("--power", g_power, "ray exponent p (> 1)")
      ->check(CLI::Range(std::nextafter(1.0, 2.0), 1e9));
  gen->add_option("--seed", g_seed, "pair seed");
  gen->add_option("--orientation", g_orient, "forward|reversed")
      ->check(CLI::IsMember({"forward", "reversed"}));
  gen->add_option("--mc", g_mc, "Monte Carlo samples for the printed ground truth");
  gen->add_option("--out", g_out, "output pair file");

  // --- solve -------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "run one solver on a pair");
  std::string s_pair, s_solver, s_config, s_out = "run", s_scale = "desk";
  std::uint64_t s_seed = 0;
  bool s_det = false;
  solve->add_option("--pair", s_pair, "pair file")->required();
  solve->add_option("--solver", s_solver, "wc|gp|lp|sn|so|ls|mmb|mm|mmr|dot|truth");
  solve->add_option("--config", s_config, "solver config JSON (overrides --solver)");
  solve->add_option("--scale", s_scale, "desk|full schedule")
      ->check(CLI::IsMember({"desk", "full"}));
  solve->add_option("--seed", s_seed, "training seed");
  solve->add_option("--out", s_out, "output run directory");
  solve->add_flag("--deterministic", s_det, "zero wall times in artifacts");

  // --- eval --------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "evaluate a finished run");
  std::string e_pair, e_run, e_out = "results";
  int e_samples = 0;  // 0 = solver-specific default
  std::uint64_t e_seed = 0;
  eval->add_option("--pair", e_pair, "pair file")->required();
  eval->add_option("--run", e_run, "run directory")->required();
  eval->add_option("--samples", e_samples,
                   "evaluation sample count (default: 8192, DOT batch size for dot runs)");
  eval->add_option("--seed", e_seed, "evaluation seed");
  eval->add_option("--out", e_out, "output directory (results.csv + json records)");

  // --- plot --------------------------------------------------------------
  auto* plot = app.add_subcommand("plot", "emit a static SVG figure");
  std::string p_pair, p_run, p_kind = "rays", p_out = "plot.svg";
  std::uint64_t p_seed = 0;
  plot->add_option("--pair", p_pair, "pair file")->required();
  plot->add_option("--run", p_run, "run directory (for learned potentials)");
  plot->add_option("--kind", p_kind, "surface|rays|pca")
      ->check(CLI::IsMember({"surface", "rays", "pca"}));
  plot->add_option("--seed", p_seed, "sampling seed");
  plot->add_option("--out", p_out, "output SVG path");

  // --- report ------------------------------------------------------------
  auto* report = app.add_subcommand("report", "aggregate eval records into a matrix");
  std::string r_dir, r_out;
  report->add_option("--dir", r_dir, "directory with .eval.json records")->required();
  report->add_option("--out", r_out, "output markdown path (stdout if omitted)");

  // --- run ---------------------------------------------------------------
  auto* runm = app.add_subcommand("run", "execute a manifest of (pair, solver, seed) jobs");
  std::string m_file;
  bool m_det = false;
  runm->add_option("--manifest", m_file, "manifest JSON")->required();
  runm->add_flag("--deterministic", m_det, "zero wall times in all outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      const auto orientation =
          g_orient == "forward" ? Orientation::Forward : Orientation::Reversed;
      const auto pair = generate_pair(g_dim, g_funnels, g_box, g_power, g_seed, orientation);
      save_pair(pair, g_out);
      RngStream rng(g_seed, kStreamGroundTruth);
      const auto truth = ground_truth(pair, g_mc, rng);
      std::cout << "pair written to " << g_out << "\n"
                << "ground-truth W1 = " << truth.w1() << " +- " << truth.w1_stderr()
                << "  (n_mc = " << g_mc << ")\n";
      return kExitOk;
    }

    if (*solve) {
      SolverConfig cfg;
      std::string solver = s_solver;
      if (!s_config.empty()) {
        cfg = load_solver_config(s_config);
        solver = solver_name(cfg.kind);
      } else if (solver == "truth") {
        // pseudo-solver handled below
      } else {
        const auto kind = solver_from_name(solver);
        if (!kind) {
          std::cerr << "unknown solver: " << solver << "\n";
          return kExitUsage;
        }
        cfg = s_scale == "full" ? SolverConfig::full(*kind) : SolverConfig::desk(*kind);
      }
      const auto pair = load_pair(s_pair);
      if (solver == "truth") {
        const auto rec = do_truth_run(pair, s_pair, s_seed, s_out, s_det);
        std::cout << "truth w1 = " << rec.w1_estimate << "\n";
      } else {
        const auto rec = do_solve(pair, s_pair, cfg, s_seed, s_out, s_det);
        std::cout << solver << " w1_estimate = " << rec.w1_estimate << "\n";
      }
      return kExitOk;
    }

    if (*eval) return run_eval(e_pair, e_run, e_samples, e_seed, e_out);

    if (*plot) {
      const auto pair = load_pair(p_pair);
      std::string svg_text;
      if (p_kind == "rays") {
        if (pair.dim() != 2) {
          std::cerr << "ray plots require D = 2\n";
          return kExitConfig;
        }
        RngStream rng(p_seed, kStreamPlot);
        svg_text = plot_rays(pair, 256, rng);
      } else if (p_kind == "surface") {
        if (pair.dim() != 2) {
          std::cerr << "surface plots require D = 2\n";
          return kExitConfig;
        }
        if (p_run.empty()) {
          const double sign = pair.orientation() == Orientation::Forward ? 1.0 : -1.0;
          svg_text = plot_surface(
              [&](const Vec& x) { return sign * pair.funnel().eval(x); },
              pair.box_halfwidth());
        } else {
          RngStream gt_rng(p_seed, kStreamGroundTruth);
          const auto truth = ground_truth(pair, 4096, gt_rng);
          const auto out = load_run_output(p_run, truth);
          svg_text = plot_surface(
              [&](const Vec& x) {
                Mat X(1, 2);
                X << x[0], x[1];
                return out.potential(X)[0];
              },
              pair.box_halfwidth());
        }
      } else {  // pca
        if (pair.dim() < 2) {
          std::cerr << "pca plots require D >= 2\n";
          return kExitConfig;
        }
        RngStream rng(p_seed, kStreamPlot);
        const auto [X, Y] = pair.sample(512, rng);
        svg_text = plot_pca(X, Y);
      }
      const auto nl = svg_text.find('\n');
      if (nl != std::string::npos) {
        std::ostringstream meta;
        meta << "\n<!-- w1bench " << kToolVersion << " kind=" << p_kind
             << " seed=" << p_seed << " pair_seed=" << pair.seed() << " -->";
        svg_text.insert(nl, meta.str());
      }
      std::ofstream out(p_out, std::ios::binary);
      if (!out) {
        std::cerr << "cannot write " << p_out << "\n";
        return kExitIo;
      }
      out << svg_text;
      std::cout << "wrote " << p_out << "\n";
      return kExitOk;
    }

    if (*report) return run_report(r_dir, r_out);

    if (*runm) {
      std::ifstream in(m_file, std::ios::binary);
      if (!in) {
        std::cerr << "cannot open manifest " << m_file << "\n";
        return kExitIo;
      }
      json manifest;
      in >> manifest;
      const auto pair_files = manifest.at("pairs").get<std::vector<std::string>>();
      const fs::path out_dir = manifest.at("out_dir").get<std::string>();
      const std::uint64_t base_seed = manifest.value("seed", 0ULL);
      const int eval_samples = manifest.value("eval_samples", 8192);
      std::vector<std::uint64_t> seeds =
          manifest.contains("seeds")
              ? manifest["seeds"].get<std::vector<std::uint64_t>>()
              : std::vector<std::uint64_t>{base_seed};
      for (const auto& pf : pair_files) {
        if (!fs::exists(pf)) {
          std::cerr << "manifest references a missing pair file: " << pf << "\n";
          return kExitConfig;
        }
      }

      struct Job {
        std::string pair_file;
        SolverConfig cfg;
        bool truth = false;
        std::uint64_t seed;
        fs::path run_dir;
      };
      std::vector<Job> jobs;
      for (const auto& pf : pair_files) {
        const std::string pstem = fs::path(pf).stem().string();
        for (const auto& sj : manifest.at("solvers")) {
          std::string sname;
          SolverConfig cfg;
          bool truth = false;
          if (sj.is_string()) {
            sname = sj.get<std::string>();
            if (sname == "truth") {
              truth = true;
            } else {
              const auto kind = solver_from_name(sname);
              if (!kind) {
                std::cerr << "unknown solver in manifest: " << sname << "\n";
                return kExitConfig;
              }
              cfg = SolverConfig::desk(*kind);
            }
          } else {
            sname = sj.at("kind").get<std::string>();
            if (sname == "truth") {
              truth = true;
            } else {
              // dump the object to a temp config parse path
              const auto kind = solver_from_name(sname);
              if (!kind) {
                std::cerr << "unknown solver in manifest: " << sname << "\n";
                return kExitConfig;
              }
              const std::string scale = sj.value("scale", "desk");
              cfg = scale == "full" ? SolverConfig::full(*kind)
                                    : SolverConfig::desk(*kind);
              if (sj.contains("iterations")) cfg.iterations = sj["iterations"].get<int>();
              if (sj.contains("batch_size")) cfg.batch_size = sj["batch_size"].get<int>();
              if (sj.contains("hidden_width"))
                cfg.hidden_width = sj["hidden_width"].get<int>();
              if (sj.contains("lambda")) cfg.lambda = sj["lambda"].get<double>();
              if (sj.contains("c")) cfg.clip_c = sj["c"].get<double>();
              if (sj.contains("eps")) cfg.eps = sj["eps"].get<double>();
              if (sj.contains("dot_batch")) cfg.dot_batch = sj["dot_batch"].get<int>();
              if (sj.contains("eval_batch")) cfg.eval_batch = sj["eval_batch"].get<int>();
            }
          }
          for (const auto seed : seeds) {
            Job job;
            job.pair_file = pf;
            job.cfg = cfg;
            job.truth = truth;
            job.seed = seed;
            job.run_dir = out_dir / "runs" /
                          (pstem + "_" + sname + "_s" + std::to_string(seed));
            jobs.push_back(std::move(job));
          }
        }
      }

      // fan out across workers; each job owns its RNG streams and files
      std::mutex err_mutex;
      std::vector<int> status(jobs.size(), kExitOk);
      std::atomic<size_t> next{0};
      const int workers = std::min<std::size_t>(worker_count(), jobs.size());
      auto work = [&]() {
        for (;;) {
          const size_t k = next.fetch_add(1);
          if (k >= jobs.size()) return;
          const auto& job = jobs[k];
          try {
            const auto pair = load_pair(job.pair_file);
            if (job.truth)
              do_truth_run(pair, job.pair_file, job.seed, job.run_dir, m_det);
            else
              do_solve(pair, job.pair_file, job.cfg, job.seed, job.run_dir, m_det);
          } catch (const DivergenceError& e) {
            std::lock_guard<std::mutex> lock(err_mutex);
            std::cerr << "job " << job.run_dir << " diverged: " << e.what() << "\n";
            status[k] = kExitDivergence;
          } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(err_mutex);
            std::cerr << "job " << job.run_dir << " failed: " << e.what() << "\n";
            status[k] = kExitConfig;
          }
        }
      };
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();

      // evaluate sequentially in manifest order so the CSV is reproducible
      int rc = kExitOk;
      for (size_t k = 0; k < jobs.size(); ++k) {
        if (status[k] != kExitOk) {
          rc = status[k];
          continue;
        }
        const int erc = run_eval(jobs[k].pair_file, jobs[k].run_dir.string(),
                                 eval_samples, jobs[k].seed, out_dir.string());
        if (erc != kExitOk) rc = erc;
      }
      return rc;
    }
  } catch (const TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const SchemaVersionError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConstructionError& e) {
    std::cerr << "construction error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
