#pragma once

#include <cstdint>
#include <string>

#include "coed/grad.hpp"
#include "coed/types.hpp"

namespace coed {

struct DesignConfig {
  double eta0 = 0.01;      // initial step size
  double decay = 0.995;    // exponential step decay per iteration
  int batch = 1000;        // Monte Carlo samples per gradient estimate
  int max_iters = 2000;
  int grad_window = 50;    // trailing window of the stopping rule
  double grad_tol = 0.05;  // stop when the window average of ||grad||_F falls
                           // below grad_tol times the first iteration's norm
  double beta = 10.0;      // Frobenius input budget
  std::uint64_t seed = 0;
};

struct TraceRow {
  int iter = 0;  // 1-based
  double grad_norm = 0.0;
  double u_norm = 0.0;
  double eta = 0.0;
  double elapsed_s = 0.0;
};

struct DesignTrace {
  std::vector<TraceRow> rows;
  bool converged = false;  // stopped by the gradient rule, not by max_iters
  int iterations = 0;
};

struct DesignResult {
  ExperimentPlan plan;  // final iterate and the budget it satisfies
  DesignTrace trace;
};

/// Euclidean projection onto {U : ||U||_F <= beta} (beta >= 0). Feasible
/// inputs are returned unchanged, so the map is idempotent bit-for-bit.
Matrix project(const Matrix& u, double beta);

/// Initial plan: entries i.i.d. uniform on [1e-3, 1e-2] (drawn column-major),
/// then projected onto the budget.
Matrix initial_plan(int nu, int horizon, double beta, std::uint64_t seed);

/// The projected-SGD loop shared by the control-oriented design and the
/// classical baselines: U_{i+1} = Proj(U_i - eta_i ghat_i), eta_i =
/// eta0 * decay^i. Iteration i (0-based) estimates its gradient with
/// batch_gradient(prior, U_i, batch, mix_seed(seed, i), fn), so runs are
/// reproducible for any worker count. The recorded grad_norm is the raw
/// estimator norm, measured before the projection step.
DesignResult projected_sgd(const MatrixNormalPrior& prior, const DesignConfig& config, Matrix u0,
                           const PerSampleGradient& fn);

/// Experiment design for the post-experiment control cost.
DesignResult design(const DesignProblem& problem, const DesignConfig& config, const Matrix& u0);

struct Evaluation {
  double mean = 0.0;
  double ci95 = 0.0;                // normal-approximation 95% half-width
  std::vector<double> samples;     // per-sample objective values, in draw order
};

/// Monte Carlo estimate of the design objective at U: each sample draws
/// (theta, W) from the substream (seed, i), simulates the experiment, fits the
/// posterior, synthesizes the CE policy and scores it on the sampled system
/// with the closed-form cost.
Evaluation evaluate_objective(const DesignProblem& problem, const Matrix& u, int n_samples,
                              std::uint64_t seed);

/// E_theta[known_theta_cost(theta)], the performance floor of any design.
/// Shares theta draws with evaluate_objective when given the same seed.
Evaluation evaluate_known_theta_bound(const DesignProblem& problem, int n_samples,
                                      std::uint64_t seed);

/// Expected cost of the certainty-equivalent controller synthesized from the
/// prior mean alone (running no experiment at all).
Evaluation evaluate_prior_mean_policy(const DesignProblem& problem, int n_samples,
                                      std::uint64_t seed);

/// Trace export: header plus one `iter,grad_norm,u_norm,eta,elapsed_s` row per
/// iteration.
std::string trace_to_csv(const DesignTrace& trace);

}  // namespace coed
