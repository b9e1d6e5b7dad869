#pragma once

#include "coed/designer.hpp"
#include "coed/types.hpp"

namespace coed {

enum class BaselineKind { kAOptimal, kLOptimal };

/// Quadratic weight of the classical design criterion
/// E[(theta_hat - theta)^T H (theta_hat - theta)], theta column-stacked.
struct WeightSpec {
  BaselineKind kind = BaselineKind::kAOptimal;
  double mu_floor = 1e-8;
  Matrix H;  // d x d with d = n_x (n_x + n_u); symmetric PSD after the shift
};

/// H = I (A-optimal design).
WeightSpec a_optimal_weight(int nx, int nu);

/// L-optimal weight: finite-difference Hessian of the optimality gap
/// R(pi; theta) = J(pi; theta) - inf_pi J(pi; theta) at theta = prior mean,
/// with pi fixed to the CE policy for the prior mean, symmetrized and shifted
/// by mu = max(0, -lambda_min) + mu_floor.
WeightSpec l_optimal_weight(const DesignProblem& problem, const PolicyGains& policy_at_mean,
                            double mu_floor = 1e-8, double fd_step_rel = 1e-4);

WeightSpec make_weight_spec(const DesignProblem& problem, BaselineKind kind,
                            double mu_floor = 1e-8);

/// (theta_hat - theta)^T H (theta_hat - theta) for one simulated sample.
double baseline_objective_sample(const DesignProblem& problem, const SystemParams& theta,
                                 const NoiseBlock& noise, const Matrix& u,
                                 const WeightSpec& weight);

/// Pathwise gradient of the baseline objective sample: the chain runs through
/// dTheta_hat/dU only (no controller in the objective).
Matrix baseline_sample_gradient(const DesignProblem& problem, const SystemParams& theta,
                                const NoiseBlock& noise, const Matrix& u,
                                const WeightSpec& weight);

/// Projected SGD on the classical criterion, same loop and seeding scheme as
/// design().
DesignResult design_baseline(const DesignProblem& problem, const DesignConfig& config,
                             const Matrix& u0, const WeightSpec& weight);
DesignResult design_baseline(const DesignProblem& problem, const DesignConfig& config,
                             const Matrix& u0, BaselineKind kind);

/// Monte Carlo value of the baseline criterion at U (same substream scheme as
/// evaluate_objective).
Evaluation evaluate_baseline_objective(const DesignProblem& problem, const Matrix& u,
                                       const WeightSpec& weight, int n_samples,
                                       std::uint64_t seed);

}  // namespace coed
