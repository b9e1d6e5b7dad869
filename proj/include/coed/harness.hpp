#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coed/baselines.hpp"
#include "coed/designer.hpp"
#include "coed/types.hpp"

namespace coed {

/// Benchmark problem description. Empty x0 / prior_precision_diag mean "auto":
/// generate the size-dependent defaults (velocities 0 with the last car at
/// 2.5 and gaps cycling -4.3, 2.1 for x0; diagonal 0.1 / 0.01 / 0.05 for
/// velocity / gap / input coordinates of the prior precision inverse).
struct ProblemConfig {
  int n_cars = 3;
  std::vector<double> masses{1.0, 1.0, 1.0};
  std::vector<double> alphas{1.0, 1.0, 1.0};
  double ts = 0.1;
  double sigma_w_scale = 1e-2;             // Sigma_w = scale * I
  std::vector<double> x0;                  // empty = auto
  std::vector<double> prior_precision_diag;  // diagonal of inv(Lambda_0); empty = auto
  double q_position = 10.0;                // stage cost on the gap coordinates
  double r_scale = 1.0;                    // R = r_scale * I
  int horizon_n = 30;                      // control horizon N
  int horizon_t = 20;                      // experiment horizon T
  double alpha1 = 1e3;
  double alpha2 = 1e6;
};

struct EvalConfig {
  int n_samples = 100000;
  std::uint64_t seed = 1234;
};

struct SweepConfig {
  std::vector<std::string> methods{"coed", "a_opt", "l_opt"};
  std::vector<double> beta_list;
  std::vector<int> n_cars_list;
  std::vector<double> prior_scale_list;
};

struct RunConfig {
  ProblemConfig problem;
  DesignConfig design;
  std::string method = "coed";  // coed | a_opt | l_opt
  EvalConfig eval;
  SweepConfig sweep;
};

/// Flat INI-style config: [section] headers, key = value lines, comma lists,
/// '#' comments. Unknown sections or keys are errors.
RunConfig parse_config(const std::string& text);
std::string serialize_config(const RunConfig& config);
RunConfig load_config_file(const std::string& path);

/// The 3-car benchmark with the standard constants (sampling time 0.1, unit
/// masses and drags, Sigma_w = 1e-2 I, T = 20, N = 30, position weight 10,
/// R = I, the fixed 5-state x0 and prior precision diagonal, alpha1 = 1e3,
/// alpha2 = 1e6, eta0 = 0.01, batch 1000).
RunConfig paper_carstring_preset();

/// Instantiates the design problem (system prior, LQR spec) from a problem
/// block; applies the auto rules for empty x0 / prior diagonal.
DesignProblem build_problem(const ProblemConfig& config);

/// Problem block rescaled to a different car count (auto x0/prior, masses and
/// drags padded with 1.0), used by the scaling sweep.
ProblemConfig resize_problem(const ProblemConfig& config, int n_cars);

/// Shortest-round-trip decimal formatting used for every number we emit.
std::string format_double(double v);

/// Headerless CSV matrix I/O for input plans (n_u rows, T columns).
std::string u_to_csv(const Matrix& u);
Matrix u_from_csv(const std::string& text);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// One designed run: initial plan from the design seed, method dispatch,
/// optional trace.
struct SingleRun {
  DesignResult result;
  double design_seconds = 0.0;
};
SingleRun run_design(const RunConfig& config);

/// Fig. 1 protocol: for each beta and each sweep method, design and evaluate;
/// emits `method,beta,mean_cost,ci95,u_norm,iters,seconds` rows plus one
/// lower_bound row (known-theta cost) and one no_experiment row (CE controller
/// from the prior mean), whose beta field is empty. Per-row design failures
/// are recorded as nan rows and the sweep continues.
std::string run_beta_sweep(const RunConfig& config, bool parallel_points = false);

/// Fig. 2 protocol: for each car count, design at the configured budget and
/// record convergence and per-sample gradient timing; emits
/// `n_cars,n_x,iters,grad_sample_ms,norm_final_objective`.
std::string run_scaling(const RunConfig& config, bool parallel_points = false);

/// Prior-information sweep: scales the prior covariance by each factor and
/// emits `prior_trace,mean_cost,ci95,p5,p95`.
std::string run_prior_sweep(const RunConfig& config, bool parallel_points = false);

}  // namespace coed
