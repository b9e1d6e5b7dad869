#pragma once

#include "coed/types.hpp"

namespace coed {

/// Magnitude cap applied to simulated states before they enter the regression
/// and the weight function. Unstable samples can overflow double range; the
/// cap keeps every downstream quantity finite while the weight drives the
/// offending points' influence toward zero.
inline constexpr double kStateSentinel = 1e30;

/// Elementwise clamp to [-kStateSentinel, kStateSentinel]; NaN maps to the
/// sentinel.
double clamp_sentinel(double v);
Matrix clamp_states(const Matrix& x);

/// Trajectory-point weight s(x) = 0.5 - atan((||x|| - alpha1) * alpha2) / pi,
/// a smooth step from ~1 (small states) down to ~0 (states past alpha1).
double state_weight(const Vector& x, double alpha1, double alpha2);

/// Per-column weights s(x_i) for the columns of X.
Vector weight_vector(const Matrix& x, double alpha1, double alpha2);

/// diag([s(x_0), ..., s(x_{M-1})]).
Matrix weight_matrix(const Matrix& x, double alpha1, double alpha2);

/// Weighted Bayesian update: with Z = [X; U] and S = diag(weights),
///   Lambda_n = Lambda_0 + Z S Z^T,
///   Theta_hat = (Theta_0 Lambda_0 + X^+ S Z^T) inv(Lambda_n),
/// computed via a symmetric PD solve (jitter fallback on round-off).
Posterior posterior(const MatrixNormalPrior& prior, const Dataset& data, double alpha1,
                    double alpha2);

/// Same update from pre-assembled regression blocks (z already stacked and
/// clamped, x_plus clamped, weights evaluated). Gradient code builds these
/// blocks once per sample and must see bit-identical estimates.
Posterior posterior_from_parts(const MatrixNormalPrior& prior, const Matrix& z,
                               const Matrix& x_plus_clamped, const Vector& weights);

/// LLT with the posterior's jitter-on-round-off fallback; fails only if the
/// matrix is genuinely indefinite.
Eigen::LLT<Matrix> spd_factor(const Matrix& m, const char* what);

}  // namespace coed
