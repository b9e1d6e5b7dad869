#include "coed/grad.hpp"

#include <cmath>
#include <numbers>

#include "coed/estimator.hpp"
#include "coed/lqr.hpp"
#include "coed/model.hpp"
#include "coed/parallel.hpp"
#include "coed/sim.hpp"

namespace coed {

namespace {

// Per-step quantities of the Riccati recursion at the estimate, shared across
// all perturbation directions of Theta_hat.
struct RiccatiCache {
  Matrix A, B;
  PolicyGains policy;
  std::vector<Eigen::LLT<Matrix>> m_llt;  // R + B^T P_{t+1} B
  std::vector<Matrix> bt_p;               // B^T P_{t+1}
  std::vector<Matrix> a_cl;               // A + B K_t
  std::vector<Matrix> p_acl;              // P_{t+1} (A + B K_t)
  std::vector<Matrix> rk;                 // R K_t
};

RiccatiCache build_riccati_cache(const SystemParams& estimate, const LqrSpec& spec) {
  RiccatiCache c;
  c.A = estimate.A;
  c.B = estimate.B;
  c.policy = ce_gains(estimate, spec);
  c.m_llt.resize(spec.N);
  c.bt_p.resize(spec.N);
  c.a_cl.resize(spec.N);
  c.p_acl.resize(spec.N);
  c.rk.resize(spec.N);
  for (int t = 0; t < spec.N; ++t) {
    const Matrix& p_next = c.policy.values[t + 1];
    c.bt_p[t] = c.B.transpose() * p_next;
    Matrix m = spec.R + c.bt_p[t] * c.B;
    m = 0.5 * (m + m.transpose());
    c.m_llt[t].compute(m);
    COED_CHECK(c.m_llt[t].info() == Eigen::Success, "gain sensitivity: R + B^T P B not PD");
    c.a_cl[t] = c.A + c.B * c.policy.gains[t];
    c.p_acl[t] = p_next * c.a_cl[t];
    c.rk[t] = spec.R * c.policy.gains[t];
  }
  return c;
}

// Backward sweep of the coupled sensitivity recursions for a unit perturbation
// of Theta_hat entry (m, n):
//   dK_t = -M_t^{-1} (B^T dP_{t+1} A_cl + direction terms),
//   dP_t = sym(dK_t^T R K_t + dA_cl^T P_{t+1} A_cl) + A_cl^T dP_{t+1} A_cl,
// with dP_N = 0. visit(t, dK_t) runs for t = N-1 down to 0.
template <typename Visit>
void directional_gain_derivatives(const RiccatiCache& c, const LqrSpec& spec, int m, int n,
                                  Visit&& visit) {
  const int nx = static_cast<int>(c.A.rows());
  const int nu = static_cast<int>(c.B.cols());
  const bool a_dir = n < nx;
  const int j = a_dir ? -1 : n - nx;

  Matrix dp_next = Matrix::Zero(nx, nx);
  Matrix rhs(nu, nx), dk(nu, nx), dacl(nx, nx), h(nx, nx), dp(nx, nx), bt_dp(nu, nx);

  for (int t = spec.N - 1; t >= 0; --t) {
    const Matrix& k = c.policy.gains[t];
    bt_dp.noalias() = c.B.transpose() * dp_next;
    rhs.noalias() = bt_dp * c.a_cl[t];
    if (a_dir) {
      rhs.col(n) += c.bt_p[t].col(m);
    } else {
      rhs.row(j) += c.p_acl[t].row(m);
      rhs.noalias() += c.bt_p[t].col(m) * k.row(j);
    }
    dk = -c.m_llt[t].solve(rhs);

    dacl.noalias() = c.B * dk;
    if (a_dir) {
      dacl(m, n) += 1.0;
    } else {
      dacl.row(m) += k.row(j);
    }

    h.noalias() = dk.transpose() * c.rk[t];
    h.noalias() += dacl.transpose() * c.p_acl[t];
    dp.noalias() = c.a_cl[t].transpose() * dp_next * c.a_cl[t];
    dp += h + h.transpose();

    visit(t, dk);
    dp_next.swap(dp);
  }
}

std::vector<Matrix> cost_gain_gradients_with_values(const SystemParams& truth,
                                                    const PolicyGains& policy,
                                                    const std::vector<Matrix>& values,
                                                    const LqrSpec& spec) {
  const int nx = truth.nx();
  std::vector<Matrix> grads(spec.N);
  // Second moment of x_t under the true closed loop.
  Matrix second_moment = spec.x0 * spec.x0.transpose();
  for (int t = 0; t < spec.N; ++t) {
    const Matrix& k = policy.gains[t];
    const Matrix& p_next = values[t + 1];
    const Matrix bt_p = truth.B.transpose() * p_next;
    const Matrix residual = (spec.R + bt_p * truth.B) * k + bt_p * truth.A;
    grads[t] = 2.0 * residual * second_moment;
    const Matrix a_cl = truth.A + truth.B * k;
    second_moment = a_cl * second_moment * a_cl.transpose() + spec.sigma_w;
    second_moment = 0.5 * (second_moment + second_moment.transpose());
  }
  (void)nx;
  return grads;
}

Matrix estimate_adjoint_cached(const RiccatiCache& cache, const LqrSpec& spec,
                               const std::vector<Matrix>& cost_gain_grads) {
  const int nx = static_cast<int>(cache.A.rows());
  const int p = nx + static_cast<int>(cache.B.cols());
  Matrix adj(nx, p);
  for (int n = 0; n < p; ++n) {
    for (int m = 0; m < nx; ++m) {
      double acc = 0.0;
      directional_gain_derivatives(cache, spec, m, n, [&](int t, const Matrix& dk) {
        acc += cost_gain_grads[t].cwiseProduct(dk).sum();
      });
      adj(m, n) = acc;
    }
  }
  return adj;
}

}  // namespace

std::vector<Matrix> cost_gain_gradients(const SystemParams& truth, const PolicyGains& policy,
                                        const LqrSpec& spec) {
  COED_REQUIRE(policy.horizon() == spec.N, "cost_gain_gradients: policy horizon mismatch");
  const std::vector<Matrix> values = closed_loop_values(truth, policy, spec);
  return cost_gain_gradients_with_values(truth, policy, values, spec);
}

std::vector<Matrix> gain_jacobians_wrt_estimate(const SystemParams& estimate,
                                                const LqrSpec& spec) {
  COED_REQUIRE(estimate.A.allFinite() && estimate.B.allFinite(),
               "gain_jacobians_wrt_estimate: non-finite estimate");
  const RiccatiCache cache = build_riccati_cache(estimate, spec);
  const int nx = estimate.nx();
  const int nu = estimate.nu();
  const int p = nx + nu;
  std::vector<Matrix> jac(spec.N, Matrix::Zero(nu * nx, nx * p));
  for (int n = 0; n < p; ++n) {
    for (int m = 0; m < nx; ++m) {
      const int col = m + n * nx;
      directional_gain_derivatives(cache, spec, m, n, [&](int t, const Matrix& dk) {
        jac[t].col(col) = vectorize(dk);
      });
    }
  }
  return jac;
}

Matrix estimate_adjoint(const SystemParams& estimate, const LqrSpec& spec,
                        const std::vector<Matrix>& cost_gain_grads) {
  COED_REQUIRE(static_cast<int>(cost_gain_grads.size()) == spec.N,
               "estimate_adjoint: gradient list length mismatch");
  return estimate_adjoint_cached(build_riccati_cache(estimate, spec), spec, cost_gain_grads);
}

SampleContext make_sample_context(const MatrixNormalPrior& prior, const SystemParams& theta,
                                  const NoiseBlock& noise, const Matrix& u, const Vector& x0,
                                  double alpha1, double alpha2) {
  COED_REQUIRE(alpha2 > 0.0, "make_sample_context: alpha2 must be positive");
  const int nx = prior.nx();
  const int nu = prior.nu();
  const int horizon = static_cast<int>(u.cols());
  COED_REQUIRE(theta.nx() == nx && theta.nu() == nu,
               "make_sample_context: sampled system does not match prior dimensions");

  SampleContext ctx;
  ctx.theta = theta;
  ctx.u = u;

  const StateTrajectory traj = rollout(theta, u, noise, x0);
  ctx.x = clamp_states(traj.X);
  ctx.y.resize(nx, horizon);
  if (horizon > 1) ctx.y.leftCols(horizon - 1) = ctx.x.rightCols(horizon - 1);
  ctx.y.col(horizon - 1) = clamp_states(traj.x_T);

  ctx.mask.resize(nx, horizon + 1);
  auto in_range = [](double v) { return std::isfinite(v) && std::abs(v) < kStateSentinel; };
  for (int t = 0; t < horizon; ++t)
    for (int i = 0; i < nx; ++i) ctx.mask(i, t) = in_range(traj.X(i, t)) ? 1.0 : 0.0;
  for (int i = 0; i < nx; ++i) ctx.mask(i, horizon) = in_range(traj.x_T(i)) ? 1.0 : 0.0;

  ctx.z.resize(nx + nu, horizon);
  ctx.z.topRows(nx) = ctx.x;
  ctx.z.bottomRows(nu) = u;

  ctx.s = weight_vector(ctx.x, alpha1, alpha2);

  // d s_t / d x_t = -(alpha2/pi) / (1 + alpha2^2 (||x||-alpha1)^2) * x/||x||,
  // masked where the clamp saturates.
  ctx.weight_grad.resize(nx, horizon);
  for (int t = 0; t < horizon; ++t) {
    const double norm = ctx.x.col(t).norm();
    if (norm < 1e-300) {
      ctx.weight_grad.col(t).setZero();
      continue;
    }
    const double arg = (norm - alpha1) * alpha2;
    const double factor = -(alpha2 / std::numbers::pi) / (1.0 + arg * arg) / norm;
    ctx.weight_grad.col(t) = factor * ctx.x.col(t).cwiseProduct(ctx.mask.col(t));
  }

  ctx.post = posterior_from_parts(prior, ctx.z, ctx.y, ctx.s);
  ctx.lambda_llt = spd_factor(ctx.post.col_precision, "make_sample_context");
  return ctx;
}

Matrix posterior_input_jacobian(const SampleContext& ctx, const MatrixNormalPrior& prior) {
  const int nx = prior.nx();
  const int nu = prior.nu();
  const int p = nx + nu;
  const int horizon = static_cast<int>(ctx.u.cols());

  // Impulse responses A^k B, k = 0..T-1.
  std::vector<Matrix> akb(horizon);
  akb[0] = ctx.theta.B;
  for (int k = 1; k < horizon; ++k) akb[k] = ctx.theta.A * akb[k - 1];

  const Matrix& theta_hat = ctx.post.mean;
  Matrix out(nx * p, nu * horizon);
  Matrix dpsi(nx, p), dlam(p, p);
  Vector dz(p);

  for (int j = 0; j < horizon; ++j) {
    for (int i = 0; i < nu; ++i) {
      dpsi.setZero();
      dlam.setZero();
      for (int t = j; t < horizon; ++t) {
        // d x_t / d u_ij (raw, pre-clamp) and its successor.
        Vector dt_raw = (t == j) ? Vector::Zero(nx) : Vector(akb[t - 1 - j].col(i));
        const Vector dt1 = akb[t - j].col(i).cwiseProduct(ctx.mask.col(t + 1));
        const double ds = ctx.weight_grad.col(t).dot(dt_raw);
        dz.head(nx) = dt_raw.cwiseProduct(ctx.mask.col(t));
        dz.tail(nu).setZero();
        if (t == j) dz(nx + i) = 1.0;

        dpsi.noalias() +=
            (ctx.s(t) * dt1 + ds * ctx.y.col(t)) * ctx.z.col(t).transpose();
        dpsi.noalias() += ctx.s(t) * ctx.y.col(t) * dz.transpose();
        dlam.noalias() += ctx.s(t) * (dz * ctx.z.col(t).transpose() +
                                      ctx.z.col(t) * dz.transpose());
        dlam.noalias() += ds * ctx.z.col(t) * ctx.z.col(t).transpose();
      }
      const Matrix numerator = dpsi - theta_hat * dlam;
      const Matrix dtheta = ctx.lambda_llt.solve(numerator.transpose()).transpose();
      out.col(i + j * nu) = vectorize(dtheta);
    }
  }
  return out;
}

Matrix input_gradient_from_estimate_adjoint(const SampleContext& ctx, const Matrix& adjoint) {
  const int nx = static_cast<int>(ctx.x.rows());
  const int nu = static_cast<int>(ctx.u.rows());
  const int horizon = static_cast<int>(ctx.u.cols());
  COED_REQUIRE(adjoint.rows() == nx && adjoint.cols() == nx + nu,
               "input_gradient_from_estimate_adjoint: adjoint must be n_x x (n_x+n_u)");

  // W_psi = adjoint * inv(Lambda_n); W_lam = Theta_hat^T W_psi.
  const Matrix w_psi = ctx.lambda_llt.solve(adjoint.transpose()).transpose();
  const Matrix w_lam = ctx.post.mean.transpose() * w_psi;
  const Matrix w_lam_sym = w_lam + w_lam.transpose();

  Matrix xbar = Matrix::Zero(nx, horizon + 1);
  Matrix grad = Matrix::Zero(nu, horizon);

  for (int t = 0; t < horizon; ++t) {
    const Vector wz = w_psi * ctx.z.col(t);
    const Vector zbar =
        ctx.s(t) * (w_psi.transpose() * ctx.y.col(t) - w_lam_sym * ctx.z.col(t));
    const double sbar =
        ctx.y.col(t).dot(wz) - ctx.z.col(t).dot(w_lam * ctx.z.col(t));

    xbar.col(t + 1) += ctx.s(t) * wz.cwiseProduct(ctx.mask.col(t + 1));
    xbar.col(t) += zbar.head(nx).cwiseProduct(ctx.mask.col(t));
    xbar.col(t) += sbar * ctx.weight_grad.col(t);
    grad.col(t) += zbar.tail(nu);
  }

  // Backpropagate through x_{t+1} = A x_t + B u_t + w_t (x_0 fixed).
  Vector a = xbar.col(horizon);
  for (int t = horizon - 1; t >= 0; --t) {
    grad.col(t) += ctx.theta.B.transpose() * a;
    a = xbar.col(t) + ctx.theta.A.transpose() * a;
  }
  return grad;
}

SampleGradient sample_gradient(const DesignProblem& problem, const SystemParams& theta,
                               const NoiseBlock& noise, const Matrix& u) {
  const SampleContext ctx = make_sample_context(problem.prior, theta, noise, u,
                                                problem.lqr.x0, problem.alpha1, problem.alpha2);
  const SystemParams estimate = split_theta(ctx.post.mean, problem.nx());
  const RiccatiCache cache = build_riccati_cache(estimate, problem.lqr);
  const std::vector<Matrix> values_true = closed_loop_values(theta, cache.policy, problem.lqr);
  const std::vector<Matrix> cost_grads =
      cost_gain_gradients_with_values(theta, cache.policy, values_true, problem.lqr);
  const Matrix adjoint = estimate_adjoint_cached(cache, problem.lqr, cost_grads);
  return SampleGradient{input_gradient_from_estimate_adjoint(ctx, adjoint)};
}

PathwiseEstimate batch_gradient(const MatrixNormalPrior& prior, const Matrix& u, int batch,
                                std::uint64_t seed, const PerSampleGradient& fn) {
  COED_REQUIRE(batch >= 1, "batch_gradient: batch size must be >= 1");
  const ExperimentSampler sampler(prior);
  const int horizon = static_cast<int>(u.cols());
  const Rng base(seed);

  std::vector<Matrix> grads(batch);
  PathwiseEstimate est;
  est.sample_norms.resize(batch);

  parallel_chunks(batch, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Rng rng = base.substream(static_cast<std::uint64_t>(i));
      const SystemParams theta = sampler.sample_theta(rng);
      const NoiseBlock noise = sampler.sample_noise(horizon, rng);
      Matrix g = fn(theta, noise, u);
      COED_CHECK(g.allFinite(),
                 "batch_gradient: non-finite gradient at sample index " + std::to_string(i));
      est.sample_norms[i] = g.norm();
      grads[i] = std::move(g);
    }
  });

  // Fixed-order reduction keeps the mean bit-stable across worker counts.
  Matrix sum = Matrix::Zero(u.rows(), u.cols());
  for (const Matrix& g : grads) sum += g;
  est.mean_gradient = sum / static_cast<double>(batch);
  return est;
}

PathwiseEstimate pathwise_estimate(const DesignProblem& problem, const Matrix& u, int batch,
                                   std::uint64_t seed) {
  return batch_gradient(problem.prior, u, batch, seed,
                        [&problem](const SystemParams& theta, const NoiseBlock& noise,
                                   const Matrix& uu) {
                          return sample_gradient(problem, theta, noise, uu).dJ_dU;
                        });
}

}  // namespace coed
