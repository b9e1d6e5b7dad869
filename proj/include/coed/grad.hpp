#pragma once

#include <cstdint>
#include <functional>

#include "coed/rng.hpp"
#include "coed/types.hpp"

namespace coed {

/// All flattened index layouts below use column-stacking, matching vectorize():
/// entry (i, j) of an r x c matrix sits at flat index i + j*r.

/// Exact gradient of the closed-form cost with respect to each gain K_t,
/// holding the other gains fixed:
///   dJ/dK_t = 2 [ (R + B^T P_{t+1} B) K_t + B^T P_{t+1} A ] * Sigma_t,
/// where P are the true-system closed-loop values and Sigma_t is the second
/// moment of x_t under the true closed loop (Sigma_0 = x0 x0^T,
/// Sigma_{t+1} = A_cl Sigma_t A_cl^T + Sigma_w).
std::vector<Matrix> cost_gain_gradients(const SystemParams& truth, const PolicyGains& policy,
                                        const LqrSpec& spec);

/// Sensitivities of every gain entry to every entry of the estimate
/// Theta_hat = [A_hat, B_hat], from the coupled backward recursions for
/// dK_t and dP_t with dP_N = 0. Result: one (n_u*n_x) x (n_x*(n_x+n_u))
/// Jacobian per time step, rows indexing vec(K_t), columns vec(Theta_hat).
std::vector<Matrix> gain_jacobians_wrt_estimate(const SystemParams& estimate, const LqrSpec& spec);

/// Contraction sum_t <dJdK[t], dK_t/dTheta_hat_mn> into an n_x x (n_x+n_u)
/// adjoint, computed direction-by-direction so the full per-t Jacobians are
/// never materialized.
Matrix estimate_adjoint(const SystemParams& estimate, const LqrSpec& spec,
                        const std::vector<Matrix>& cost_gain_grads);

/// Derived quantities of one simulated sample (theta, W, U) that both gradient
/// routes through the estimator share: the trajectory, the clamped regression
/// blocks, the weights and their state-gradients, and the posterior with its
/// factorization.
struct SampleContext {
  SystemParams theta;   // sampled true system
  Matrix u;             // n_u x T
  Matrix x;             // clamped states x_0..x_{T-1} (n_x x T)
  Matrix y;             // clamped successors x_1..x_T (n_x x T)
  Matrix z;             // [x; u] (p x T)
  Vector s;             // weights s(x_t)
  Matrix weight_grad;   // d s_t / d x_t columns (n_x x T), clamp-masked
  Matrix mask;          // 1 where the raw state was inside the sentinel (n_x x (T+1))
  Posterior post;
  Eigen::LLT<Matrix> lambda_llt;  // factorization of post.col_precision
};

SampleContext make_sample_context(const MatrixNormalPrior& prior, const SystemParams& theta,
                                  const NoiseBlock& noise, const Matrix& u, const Vector& x0,
                                  double alpha1, double alpha2);

/// Full Jacobian of the posterior-mean entries with respect to the input
/// entries, including the chain through the trajectory and the weights:
/// (n_x*(n_x+n_u)) x (n_u*T), columns indexing vec(U).
Matrix posterior_input_jacobian(const SampleContext& ctx, const MatrixNormalPrior& prior);

/// Adjoint (vector-Jacobian) form of the same map: given the cost's adjoint G
/// with respect to Theta_hat, returns sum_mn G_mn dTheta_hat_mn/dU as an
/// n_u x T matrix without materializing the full Jacobian. Agrees with
/// posterior_input_jacobian-based contraction to round-off.
Matrix input_gradient_from_estimate_adjoint(const SampleContext& ctx, const Matrix& adjoint);

/// Pathwise gradient of the post-experiment cost for one sampled (theta, W):
/// the chain dJ/dK -> dK/dTheta_hat -> dTheta_hat/dU evaluated at
/// X = g(W, theta; U).
struct SampleGradient {
  Matrix dJ_dU;  // n_u x T
};

SampleGradient sample_gradient(const DesignProblem& problem, const SystemParams& theta,
                               const NoiseBlock& noise, const Matrix& u);

/// Per-sample gradient callback used for batching; receives the sampled system
/// and its noise block.
using PerSampleGradient =
    std::function<Matrix(const SystemParams& theta, const NoiseBlock& noise, const Matrix& u)>;

struct PathwiseEstimate {
  Matrix mean_gradient;              // n_u x T
  std::vector<double> sample_norms;  // Frobenius norm of each per-sample gradient
};

/// Averages L i.i.d. per-sample gradients. Sample i draws from the substream
/// (seed, i): first theta, then the noise block; the reduction runs in sample
/// order, so the result is identical for any worker count.
PathwiseEstimate batch_gradient(const MatrixNormalPrior& prior, const Matrix& u, int batch,
                                std::uint64_t seed, const PerSampleGradient& fn);

/// batch_gradient specialized to the post-experiment-cost sample gradient.
PathwiseEstimate pathwise_estimate(const DesignProblem& problem, const Matrix& u, int batch,
                                   std::uint64_t seed);

}  // namespace coed
