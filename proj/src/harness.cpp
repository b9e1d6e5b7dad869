#include "coed/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "coed/lqr.hpp"
#include "coed/model.hpp"
#include "coed/parallel.hpp"
#include "coed/rng.hpp"
#include "coed/sim.hpp"

namespace coed {

namespace {

// Seed-derivation tags; any fixed scheme works, it just has to be stable.
constexpr std::uint64_t kInitPlanTag = 0x494e4954;
constexpr std::uint64_t kLowerBoundTag = 0x4c42;
constexpr std::uint64_t kNoExperimentTag = 0x4e45;
constexpr std::uint64_t kTimingTag = 0x54494d45;
constexpr std::uint64_t kScalingTag = 0x5343;
constexpr std::uint64_t kPriorTag = 0x5052;
constexpr std::uint64_t kStepProbeTag = 0x50524f42;

int method_id(const std::string& method) {
  if (method == "coed") return 0;
  if (method == "a_opt") return 1;
  if (method == "l_opt") return 2;
  COED_REQUIRE(false, "unknown method '" + method + "' (expected coed, a_opt or l_opt)");
  return -1;  // unreachable
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Linear-interpolation percentile of an unsorted sample vector, q in [0, 1].
double percentile(std::vector<double> values, double q) {
  COED_REQUIRE(!values.empty(), "percentile: empty sample set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

// Runs n independent point jobs either sequentially or on a thread pool with
// the inner per-sample parallelism turned off. Output slots are indexed, so
// row order never depends on scheduling.
void run_jobs(int n, bool parallel_points, const std::function<void(int)>& job) {
  if (!parallel_points || n <= 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  const int outer = std::min(worker_count(), n);
  set_worker_count(1);
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < outer; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) job(i);
    });
  }
  for (auto& t : pool) t.join();
  set_worker_count(outer);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  COED_CHECK(ec == std::errc(), "format_double: conversion failed");
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Config parsing / serialization

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& key) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  COED_REQUIRE(res.ec == std::errc() && res.ptr == t.data() + t.size(),
               "config: bad number for " + key + ": '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& key) {
  const std::string t = trim(s);
  std::int64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  COED_REQUIRE(res.ec == std::errc() && res.ptr == t.data() + t.size(),
               "config: bad integer for " + key + ": '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  COED_REQUIRE(res.ec == std::errc() && res.ptr == t.data() + t.size(),
               "config: bad seed for " + key + ": '" + s + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  if (trim(s) == "auto" || trim(s).empty()) return out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(item, key));
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
  std::vector<int> out;
  if (trim(s).empty()) return out;
  for (const auto& item : split_list(s)) out.push_back(static_cast<int>(parse_int(item, key)));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_strings(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += v[i];
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::string section;
  std::stringstream ss(text);
  std::string raw;
  while (std::getline(ss, raw)) {
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      COED_REQUIRE(line.back() == ']', "config: malformed section header '" + raw + "'");
      section = trim(line.substr(1, line.size() - 2));
      COED_REQUIRE(section == "problem" || section == "design" || section == "eval" ||
                       section == "sweep",
                   "config: unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    COED_REQUIRE(eq != std::string::npos, "config: expected key = value, got '" + raw + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qual = section + "." + key;

    if (section == "problem") {
      auto& p = cfg.problem;
      if (key == "n_cars") p.n_cars = static_cast<int>(parse_int(value, qual));
      else if (key == "masses") p.masses = parse_double_list(value, qual);
      else if (key == "alphas") p.alphas = parse_double_list(value, qual);
      else if (key == "ts") p.ts = parse_double(value, qual);
      else if (key == "sigma_w_scale") p.sigma_w_scale = parse_double(value, qual);
      else if (key == "x0") p.x0 = parse_double_list(value, qual);
      else if (key == "prior_precision_diag") p.prior_precision_diag = parse_double_list(value, qual);
      else if (key == "q_position") p.q_position = parse_double(value, qual);
      else if (key == "r_scale") p.r_scale = parse_double(value, qual);
      else if (key == "horizon_n") p.horizon_n = static_cast<int>(parse_int(value, qual));
      else if (key == "horizon_t") p.horizon_t = static_cast<int>(parse_int(value, qual));
      else if (key == "alpha1") p.alpha1 = parse_double(value, qual);
      else if (key == "alpha2") p.alpha2 = parse_double(value, qual);
      else COED_REQUIRE(false, "config: unknown key " + qual);
    } else if (section == "design") {
      auto& d = cfg.design;
      if (key == "method") {
        (void)method_id(value);
        cfg.method = value;
      }
      else if (key == "eta0") d.eta0 = parse_double(value, qual);
      else if (key == "decay") d.decay = parse_double(value, qual);
      else if (key == "batch") d.batch = static_cast<int>(parse_int(value, qual));
      else if (key == "max_iters") d.max_iters = static_cast<int>(parse_int(value, qual));
      else if (key == "grad_window") d.grad_window = static_cast<int>(parse_int(value, qual));
      else if (key == "grad_tol") d.grad_tol = parse_double(value, qual);
      else if (key == "beta") d.beta = parse_double(value, qual);
      else if (key == "seed") d.seed = parse_u64(value, qual);
      else COED_REQUIRE(false, "config: unknown key " + qual);
    } else if (section == "eval") {
      if (key == "n_samples") cfg.eval.n_samples = static_cast<int>(parse_int(value, qual));
      else if (key == "seed") cfg.eval.seed = parse_u64(value, qual);
      else COED_REQUIRE(false, "config: unknown key " + qual);
    } else if (section == "sweep") {
      auto& s = cfg.sweep;
      if (key == "methods") {
        s.methods = split_list(value);
        for (const auto& m : s.methods) (void)method_id(m);
      } else if (key == "beta_list") s.beta_list = parse_double_list(value, qual);
      else if (key == "n_cars_list") s.n_cars_list = parse_int_list(value, qual);
      else if (key == "prior_scale_list") s.prior_scale_list = parse_double_list(value, qual);
      else COED_REQUIRE(false, "config: unknown key " + qual);
    } else {
      COED_REQUIRE(false, "config: key outside any section: '" + raw + "'");
    }
  }
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  const auto& p = cfg.problem;
  out += "[problem]\n";
  out += "n_cars = " + std::to_string(p.n_cars) + "\n";
  out += "masses = " + join_doubles(p.masses) + "\n";
  out += "alphas = " + join_doubles(p.alphas) + "\n";
  out += "ts = " + format_double(p.ts) + "\n";
  out += "sigma_w_scale = " + format_double(p.sigma_w_scale) + "\n";
  out += "x0 = " + (p.x0.empty() ? std::string("auto") : join_doubles(p.x0)) + "\n";
  out += "prior_precision_diag = " +
         (p.prior_precision_diag.empty() ? std::string("auto")
                                         : join_doubles(p.prior_precision_diag)) +
         "\n";
  out += "q_position = " + format_double(p.q_position) + "\n";
  out += "r_scale = " + format_double(p.r_scale) + "\n";
  out += "horizon_n = " + std::to_string(p.horizon_n) + "\n";
  out += "horizon_t = " + std::to_string(p.horizon_t) + "\n";
  out += "alpha1 = " + format_double(p.alpha1) + "\n";
  out += "alpha2 = " + format_double(p.alpha2) + "\n";
  out += "\n[design]\n";
  out += "method = " + cfg.method + "\n";
  out += "eta0 = " + format_double(cfg.design.eta0) + "\n";
  out += "decay = " + format_double(cfg.design.decay) + "\n";
  out += "batch = " + std::to_string(cfg.design.batch) + "\n";
  out += "max_iters = " + std::to_string(cfg.design.max_iters) + "\n";
  out += "grad_window = " + std::to_string(cfg.design.grad_window) + "\n";
  out += "grad_tol = " + format_double(cfg.design.grad_tol) + "\n";
  out += "beta = " + format_double(cfg.design.beta) + "\n";
  out += "seed = " + std::to_string(cfg.design.seed) + "\n";
  out += "\n[eval]\n";
  out += "n_samples = " + std::to_string(cfg.eval.n_samples) + "\n";
  out += "seed = " + std::to_string(cfg.eval.seed) + "\n";
  out += "\n[sweep]\n";
  out += "methods = " + join_strings(cfg.sweep.methods) + "\n";
  out += "beta_list = " + join_doubles(cfg.sweep.beta_list) + "\n";
  out += "n_cars_list = " + join_ints(cfg.sweep.n_cars_list) + "\n";
  out += "prior_scale_list = " + join_doubles(cfg.sweep.prior_scale_list) + "\n";
  return out;
}

RunConfig load_config_file(const std::string& path) {
  return parse_config(read_text_file(path));
}

RunConfig paper_carstring_preset() {
  RunConfig cfg;
  cfg.problem.n_cars = 3;
  cfg.problem.masses = {1.0, 1.0, 1.0};
  cfg.problem.alphas = {1.0, 1.0, 1.0};
  cfg.problem.ts = 0.1;
  cfg.problem.sigma_w_scale = 1e-2;
  cfg.problem.x0 = {0.0, -4.3, 0.0, 2.1, 2.5};
  cfg.problem.prior_precision_diag = {0.1, 0.01, 0.05, 0.1, 0.01, 0.05, 0.1, 0.05};
  cfg.problem.q_position = 10.0;
  cfg.problem.r_scale = 1.0;
  cfg.problem.horizon_n = 30;
  cfg.problem.horizon_t = 20;
  cfg.problem.alpha1 = 1e3;
  cfg.problem.alpha2 = 1e6;
  cfg.design = DesignConfig{};
  cfg.design.beta = 10.0;
  cfg.design.seed = 1;
  cfg.method = "coed";
  cfg.eval.n_samples = 100000;
  cfg.eval.seed = 1234;
  cfg.sweep.methods = {"coed", "a_opt", "l_opt"};
  cfg.sweep.beta_list = {2.5, 5.0, 10.0, 20.0};
  cfg.sweep.n_cars_list = {2, 3, 4};
  cfg.sweep.prior_scale_list = {0.25, 0.5, 1.0, 2.0, 4.0};
  return cfg;
}

// ---------------------------------------------------------------------------
// Problem construction

namespace {

std::vector<double> auto_x0(int n_cars) {
  std::vector<double> x0(2 * n_cars - 1, 0.0);
  const double gap_cycle[2] = {-4.3, 2.1};
  for (int k = 0; k + 1 < n_cars; ++k) x0[2 * k + 1] = gap_cycle[k % 2];
  x0[2 * (n_cars - 1)] = 2.5;
  return x0;
}

std::vector<double> auto_prior_diag(int n_cars) {
  const int nx = 2 * n_cars - 1;
  std::vector<double> d(nx + n_cars);
  for (int i = 0; i < nx; ++i) d[i] = (i % 2 == 0) ? 0.1 : 0.01;  // velocity / gap
  for (int i = 0; i < n_cars; ++i) d[nx + i] = 0.05;              // input columns
  return d;
}

}  // namespace

DesignProblem build_problem(const ProblemConfig& pc) {
  const SystemParams nominal = car_string_system(pc.n_cars, pc.masses, pc.alphas, pc.ts);
  const int nx = nominal.nx();
  const int nu = nominal.nu();
  const int p = nx + nu;

  const std::vector<double> diag =
      pc.prior_precision_diag.empty() ? auto_prior_diag(pc.n_cars) : pc.prior_precision_diag;
  COED_REQUIRE(static_cast<int>(diag.size()) == p,
               "build_problem: prior_precision_diag must have n_x + n_u entries");
  Matrix lambda0 = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    COED_REQUIRE(diag[i] > 0.0, "build_problem: prior_precision_diag entries must be positive");
    lambda0(i, i) = 1.0 / diag[i];
  }

  const std::vector<double> x0v = pc.x0.empty() ? auto_x0(pc.n_cars) : pc.x0;
  COED_REQUIRE(static_cast<int>(x0v.size()) == nx, "build_problem: x0 must have n_x entries");

  DesignProblem problem;
  problem.prior.mean = theta_matrix(nominal);
  problem.prior.col_precision = lambda0;
  problem.prior.noise_cov = pc.sigma_w_scale * Matrix::Identity(nx, nx);

  problem.lqr.Q = Matrix::Zero(nx, nx);
  for (int k = 0; k + 1 < pc.n_cars; ++k) problem.lqr.Q(2 * k + 1, 2 * k + 1) = pc.q_position;
  problem.lqr.Q_N = problem.lqr.Q;
  problem.lqr.R = pc.r_scale * Matrix::Identity(nu, nu);
  problem.lqr.N = pc.horizon_n;
  problem.lqr.x0 = Eigen::Map<const Vector>(x0v.data(), nx);
  problem.lqr.sigma_w = problem.prior.noise_cov;
  problem.alpha1 = pc.alpha1;
  problem.alpha2 = pc.alpha2;
  COED_REQUIRE(pc.horizon_t >= 1, "build_problem: horizon_t must be >= 1");
  return problem;
}

ProblemConfig resize_problem(const ProblemConfig& base, int n_cars) {
  COED_REQUIRE(n_cars >= 2, "resize_problem: need at least two cars");
  ProblemConfig pc = base;
  pc.n_cars = n_cars;
  pc.masses.resize(n_cars, 1.0);
  pc.alphas.resize(n_cars, 1.0);
  pc.x0.clear();                   // auto
  pc.prior_precision_diag.clear();  // auto
  return pc;
}

// ---------------------------------------------------------------------------
// Runs and sweeps

SingleRun run_design(const RunConfig& cfg) {
  const DesignProblem problem = build_problem(cfg.problem);
  const Matrix u0 = initial_plan(problem.nu(), cfg.problem.horizon_t, cfg.design.beta,
                                 mix_seed(cfg.design.seed, kInitPlanTag));
  const auto t0 = std::chrono::steady_clock::now();
  SingleRun out;
  if (method_id(cfg.method) == 0) {
    out.result = design(problem, cfg.design, u0);
  } else {
    const WeightSpec weight = make_weight_spec(
        problem, cfg.method == "a_opt" ? BaselineKind::kAOptimal : BaselineKind::kLOptimal);
    // The classical criteria live on a very different scale than the control
    // cost (orders of magnitude smaller for A-optimality), so the configured
    // step would leave the budget unexplored. Size the first step from a
    // probe batch at U_0 so the first move spans the feasible ball.
    DesignConfig dc = cfg.design;
    if (dc.beta > 0.0) {
      const PathwiseEstimate probe = batch_gradient(
          problem.prior, u0, dc.batch, mix_seed(dc.seed, kStepProbeTag),
          [&](const SystemParams& theta, const NoiseBlock& noise, const Matrix& u) {
            return baseline_sample_gradient(problem, theta, noise, u, weight);
          });
      const double norm = probe.mean_gradient.norm();
      if (norm > 0.0 && std::isfinite(norm)) dc.eta0 = 2.0 * dc.beta / norm;
    }
    out.result = design_baseline(problem, dc, u0, weight);
  }
  out.design_seconds = seconds_since(t0);
  return out;
}

std::string run_beta_sweep(const RunConfig& cfg, bool parallel_points) {
  COED_REQUIRE(!cfg.sweep.beta_list.empty(), "run_beta_sweep: empty beta list");
  COED_REQUIRE(!cfg.sweep.methods.empty(), "run_beta_sweep: empty method list");
  const DesignProblem problem = build_problem(cfg.problem);

  std::string csv = "method,beta,mean_cost,ci95,u_norm,iters,seconds\n";
  {
    const auto t0 = std::chrono::steady_clock::now();
    const Evaluation lb = evaluate_known_theta_bound(problem, cfg.eval.n_samples,
                                                     mix_seed(cfg.eval.seed, kLowerBoundTag));
    csv += "lower_bound,," + format_double(lb.mean) + "," + format_double(lb.ci95) + ",0,0," +
           format_double(seconds_since(t0)) + "\n";
  }
  {
    const auto t0 = std::chrono::steady_clock::now();
    const Evaluation ne = evaluate_prior_mean_policy(problem, cfg.eval.n_samples,
                                                     mix_seed(cfg.eval.seed, kNoExperimentTag));
    csv += "no_experiment,," + format_double(ne.mean) + "," + format_double(ne.ci95) + ",0,0," +
           format_double(seconds_since(t0)) + "\n";
  }

  const int n_beta = static_cast<int>(cfg.sweep.beta_list.size());
  const int n_methods = static_cast<int>(cfg.sweep.methods.size());
  std::vector<std::string> rows(static_cast<std::size_t>(n_beta) * n_methods);

  run_jobs(n_beta * n_methods, parallel_points, [&](int job) {
    const int b = job / n_methods;
    const int m = job % n_methods;
    const double beta = cfg.sweep.beta_list[b];
    const std::string& method = cfg.sweep.methods[m];
    RunConfig point = cfg;
    point.method = method;
    point.design.beta = beta;
    point.design.seed = mix_seed(mix_seed(cfg.design.seed, method_id(method)),
                                 static_cast<std::uint64_t>(b));
    std::string row = method + "," + format_double(beta) + ",";
    try {
      const SingleRun run = run_design(point);
      const Evaluation ev = evaluate_objective(problem, run.result.plan.U, cfg.eval.n_samples,
                                               mix_seed(cfg.eval.seed, b));
      row += format_double(ev.mean) + "," + format_double(ev.ci95) + "," +
             format_double(run.result.plan.U.norm()) + "," +
             std::to_string(run.result.trace.iterations) + "," +
             format_double(run.design_seconds);
    } catch (const std::exception& e) {
      std::cerr << "beta sweep point (method=" << method << ", beta=" << beta
                << ") failed: " << e.what() << "\n";
      row += "nan,nan,nan,0,0";
    }
    rows[job] = row + "\n";
  });
  for (const auto& r : rows) csv += r;
  return csv;
}

std::string run_scaling(const RunConfig& cfg, bool parallel_points) {
  COED_REQUIRE(!cfg.sweep.n_cars_list.empty(), "run_scaling: empty n_cars list");
  const int n = static_cast<int>(cfg.sweep.n_cars_list.size());
  std::vector<std::string> rows(n);

  run_jobs(n, parallel_points, [&](int k) {
    const int cars = cfg.sweep.n_cars_list[k];
    RunConfig point = cfg;
    point.problem = resize_problem(cfg.problem, cars);
    point.design.seed = mix_seed(mix_seed(cfg.design.seed, kScalingTag),
                                 static_cast<std::uint64_t>(k));
    const DesignProblem problem = build_problem(point.problem);
    std::string row = std::to_string(cars) + "," + std::to_string(problem.nx()) + ",";
    try {
      const SingleRun run = run_design(point);

      // Average wall time of one pathwise gradient sample at the final plan.
      const ExperimentSampler sampler(problem.prior);
      const Rng timing_base(mix_seed(cfg.eval.seed, kTimingTag + static_cast<std::uint64_t>(k)));
      const int reps = 32;
      const auto t0 = std::chrono::steady_clock::now();
      for (int r = 0; r < reps; ++r) {
        Rng rng = timing_base.substream(static_cast<std::uint64_t>(r));
        const SystemParams theta = sampler.sample_theta(rng);
        const NoiseBlock noise = sampler.sample_noise(cfg.problem.horizon_t, rng);
        (void)sample_gradient(problem, theta, noise, run.result.plan.U);
      }
      const double ms = 1e3 * seconds_since(t0) / reps;

      const Evaluation ev = evaluate_objective(problem, run.result.plan.U, cfg.eval.n_samples,
                                               mix_seed(cfg.eval.seed, static_cast<std::uint64_t>(k)));
      const Evaluation lb = evaluate_known_theta_bound(
          problem, cfg.eval.n_samples,
          mix_seed(cfg.eval.seed, kLowerBoundTag + static_cast<std::uint64_t>(k)));
      row += std::to_string(run.result.trace.iterations) + "," + format_double(ms) + "," +
             format_double(ev.mean / lb.mean);
    } catch (const std::exception& e) {
      std::cerr << "scaling point (n_cars=" << cars << ") failed: " << e.what() << "\n";
      row += "0,nan,nan";
    }
    rows[k] = row + "\n";
  });

  std::string csv = "n_cars,n_x,iters,grad_sample_ms,norm_final_objective\n";
  for (const auto& r : rows) csv += r;
  return csv;
}

std::string run_prior_sweep(const RunConfig& cfg, bool parallel_points) {
  COED_REQUIRE(!cfg.sweep.prior_scale_list.empty(), "run_prior_sweep: empty prior scale list");
  const DesignProblem base = build_problem(cfg.problem);
  const int n = static_cast<int>(cfg.sweep.prior_scale_list.size());
  std::vector<std::string> rows(n);

  run_jobs(n, parallel_points, [&](int k) {
    const double scale = cfg.sweep.prior_scale_list[k];
    COED_REQUIRE(scale > 0.0, "run_prior_sweep: scales must be positive");

    // Scaling the prior covariance by `scale` multiplies the resolved
    // precision-inverse diagonal; express it through the problem config so the
    // point runs through the same path as every other design.
    RunConfig point = cfg;
    point.problem.prior_precision_diag.resize(base.nx() + base.nu());
    for (int i = 0; i < base.nx() + base.nu(); ++i)
      point.problem.prior_precision_diag[i] = scale / base.prior.col_precision(i, i);
    point.design.seed =
        mix_seed(mix_seed(cfg.design.seed, kPriorTag), static_cast<std::uint64_t>(k));
    double prior_trace = 0.0;
    for (double d : point.problem.prior_precision_diag) prior_trace += d;
    prior_trace *= base.prior.noise_cov.trace();

    std::string row = format_double(prior_trace) + ",";
    try {
      const SingleRun run = run_design(point);
      const DesignProblem problem = build_problem(point.problem);
      const Evaluation ev =
          evaluate_objective(problem, run.result.plan.U, cfg.eval.n_samples,
                             mix_seed(cfg.eval.seed, static_cast<std::uint64_t>(k)));
      row += format_double(ev.mean) + "," + format_double(ev.ci95) + "," +
             format_double(percentile(ev.samples, 0.05)) + "," +
             format_double(percentile(ev.samples, 0.95));
    } catch (const std::exception& e) {
      std::cerr << "prior sweep point (scale=" << scale << ") failed: " << e.what() << "\n";
      row += "nan,nan,nan,nan";
    }
    rows[k] = row + "\n";
  });

  std::string csv = "prior_trace,mean_cost,ci95,p5,p95\n";
  for (const auto& r : rows) csv += r;
  return csv;
}

// ---------------------------------------------------------------------------
// File I/O

std::string u_to_csv(const Matrix& u) {
  std::string out;
  for (int i = 0; i < u.rows(); ++i) {
    for (int j = 0; j < u.cols(); ++j) {
      if (j) out.push_back(',');
      out += format_double(u(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

Matrix u_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& item : split_list(line)) row.push_back(parse_double(item, "u matrix"));
    COED_REQUIRE(rows.empty() || row.size() == rows.front().size(),
                 "u_from_csv: ragged rows");
    rows.push_back(std::move(row));
  }
  COED_REQUIRE(!rows.empty(), "u_from_csv: empty matrix");
  Matrix u(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) u(i, j) = rows[i][j];
  return u;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  COED_CHECK(f.good(), "cannot open for writing: " + path);
  f << text;
  COED_CHECK(f.good(), "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  COED_CHECK(f.good(), "cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace coed
