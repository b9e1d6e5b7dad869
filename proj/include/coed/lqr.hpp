#pragma once

#include "coed/types.hpp"

namespace coed {

/// Validates symmetry/definiteness of the cost matrices by eigenvalue
/// threshold. Called once per design/evaluation entry point rather than per
/// sample; the per-sample operations only check dimensions.
void validate_lqr_spec(const LqrSpec& spec);

/// Certainty-equivalent finite-horizon synthesis: backward Riccati recursion
///   K_t = -(R + B^T P_{t+1} B)^{-1} B^T P_{t+1} A,
///   P_t = Q + K_t^T R K_t + (A + B K_t)^T P_{t+1} (A + B K_t),
/// from P_N = Q_N, with P_t resymmetrized each step.
PolicyGains ce_gains(const SystemParams& estimate, const LqrSpec& spec);

/// Value matrices P_0..P_N of a fixed gain sequence evaluated on the true
/// system (Lyapunov-type recursion, same shape as the Riccati step but with
/// the given gains instead of the minimizer).
std::vector<Matrix> closed_loop_values(const SystemParams& truth, const PolicyGains& policy,
                                       const LqrSpec& spec);

/// Exact expected cost of running the fixed gains on the true system:
///   J = x0^T P_0 x0 + sum_t trace(P_{t+1} Sigma_w).
double policy_cost(const SystemParams& truth, const PolicyGains& policy, const LqrSpec& spec);

/// Cost achieved with exact knowledge of the system; lower-bounds every
/// data-driven design.
double known_theta_cost(const SystemParams& truth, const LqrSpec& spec);

}  // namespace coed
