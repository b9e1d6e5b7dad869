#include <doctest.h>

#include "coed/estimator.hpp"
#include "coed/grad.hpp"
#include "coed/harness.hpp"
#include "coed/lqr.hpp"
#include "coed/model.hpp"
#include "coed/parallel.hpp"
#include "coed/sim.hpp"
#include "oracles.hpp"

using namespace coed;

namespace {

// The objective one pathwise sample differentiates: simulate the experiment,
// estimate, synthesize the CE policy, score it on the sampled truth. Built
// from the sim/estimator/lqr operations only, independent of the gradient
// implementation it checks.
double per_sample_objective(const DesignProblem& problem, const SystemParams& theta,
                            const NoiseBlock& noise, const Matrix& u) {
  const StateTrajectory traj = rollout(theta, u, noise, problem.lqr.x0);
  const Posterior post =
      posterior(problem.prior, make_dataset(traj, u), problem.alpha1, problem.alpha2);
  const PolicyGains policy = ce_gains(split_theta(post.mean, problem.nx()), problem.lqr);
  return policy_cost(theta, policy, problem.lqr);
}

DesignProblem two_car_problem(int horizon_n) {
  RunConfig cfg = paper_carstring_preset();
  cfg.problem = resize_problem(cfg.problem, 2);
  DesignProblem problem = build_problem(cfg.problem);
  problem.lqr.N = horizon_n;
  return problem;
}

DesignProblem scalar_problem(int horizon_n) {
  DesignProblem problem;
  problem.prior.mean = Matrix::Zero(1, 2);
  problem.prior.mean << 0.9, 0.5;
  problem.prior.col_precision = Matrix::Identity(2, 2) * 20.0;
  problem.prior.noise_cov = Matrix::Constant(1, 1, 0.01);
  problem.lqr.Q = Matrix::Identity(1, 1);
  problem.lqr.Q_N = Matrix::Identity(1, 1);
  problem.lqr.R = Matrix::Identity(1, 1);
  problem.lqr.N = horizon_n;
  problem.lqr.x0 = Vector::Constant(1, 1.0);
  problem.lqr.sigma_w = Matrix::Constant(1, 1, 0.01);
  return problem;
}

}  // namespace

TEST_SUITE("grad") {

TEST_CASE("cost gain gradient: zero state cost, zero gains, zero gradient") {
  Rng rng(2);
  const SystemParams sys = testing::random_stable_system(3, 2, rng);
  LqrSpec spec;
  spec.Q = Matrix::Zero(3, 3);
  spec.Q_N = Matrix::Zero(3, 3);
  spec.R = Matrix::Identity(2, 2);
  spec.N = 6;
  spec.x0 = rng.normal_vector(3);
  spec.sigma_w = 0.1 * Matrix::Identity(3, 3);
  const PolicyGains policy = ce_gains(sys, spec);  // K = 0 here
  for (const auto& g : cost_gain_gradients(sys, policy, spec)) CHECK(g.norm() == 0.0);
}

TEST_CASE("cost gain gradient: stationary at the exact gains (scalar)") {
  SystemParams sys{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)};
  LqrSpec spec;
  spec.Q = spec.Q_N = spec.R = Matrix::Identity(1, 1);
  spec.N = 1;
  spec.x0 = Vector::Constant(1, 1.0);
  spec.sigma_w = Matrix::Zero(1, 1);
  const PolicyGains policy = ce_gains(sys, spec);
  const auto grads = cost_gain_gradients(sys, policy, spec);
  CHECK(std::abs(grads[0](0, 0)) <= 1e-14);
}

TEST_CASE("cost gain gradient: matches finite differences of policy_cost") {
  Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const SystemParams sys = testing::random_stable_system(3, 2, rng);
    LqrSpec spec;
    spec.Q = testing::random_psd(3, rng);
    spec.Q_N = testing::random_psd(3, rng);
    spec.R = testing::random_pd(2, rng);
    spec.N = 5;
    spec.x0 = rng.normal_vector(3);
    spec.sigma_w = 0.05 * testing::random_pd(3, rng);

    PolicyGains policy = ce_gains(sys, spec);
    for (auto& k : policy.gains) k += 0.1 * rng.normal_matrix(2, 3);  // move off the optimum

    const auto grads = cost_gain_gradients(sys, policy, spec);
    for (int t = 0; t < spec.N; ++t) {
      const Matrix fd = testing::fd_gradient(
          [&](const Matrix& kt) {
            PolicyGains p = policy;
            p.gains[t] = kt;
            return policy_cost(sys, p, spec);
          },
          policy.gains[t], 1e-6);
      CHECK(testing::max_rel_err(grads[t], fd, 1e-7) <= 1e-5);
    }
  }
}

TEST_CASE("gain jacobian: one-step terminal case has the closed form") {
  Rng rng(7);
  const int nx = 3, nu = 2;
  const SystemParams est{rng.normal_matrix(nx, nx), rng.normal_matrix(nx, nu)};
  LqrSpec spec;
  spec.Q = testing::random_psd(nx, rng);
  spec.Q_N = testing::random_pd(nx, rng);
  spec.R = testing::random_pd(nu, rng);
  spec.N = 1;
  spec.x0 = rng.normal_vector(nx);
  spec.sigma_w = Matrix::Identity(nx, nx);

  const auto jac = gain_jacobians_wrt_estimate(est, spec);
  const Matrix m_inv = (spec.R + est.B.transpose() * spec.Q_N * est.B).inverse();
  for (int n = 0; n < nx; ++n) {
    for (int m = 0; m < nx; ++m) {
      Matrix e = Matrix::Zero(nx, nx);
      e(m, n) = 1.0;
      const Matrix expected = -m_inv * est.B.transpose() * spec.Q_N * e;
      const Matrix got = devectorize(jac[0].col(m + n * nx), nu, nx);
      CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("gain jacobian: scalar one-step sensitivity is -1/2") {
  SystemParams est{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)};
  LqrSpec spec;
  spec.Q = spec.Q_N = spec.R = Matrix::Identity(1, 1);
  spec.N = 1;
  spec.x0 = Vector::Constant(1, 1.0);
  spec.sigma_w = Matrix::Zero(1, 1);
  const auto jac = gain_jacobians_wrt_estimate(est, spec);
  // d K_0 / d a_hat: column 0 of the flattened Jacobian.
  CHECK(jac[0](0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("gain jacobian: matches finite differences of ce_gains") {
  Rng rng(11);
  const int nx = 3, nu = 2, p = nx + nu;
  for (int trial = 0; trial < 2; ++trial) {
    const SystemParams est = testing::random_stable_system(nx, nu, rng, 0.95);
    LqrSpec spec;
    spec.Q = testing::random_psd(nx, rng);
    spec.Q_N = testing::random_psd(nx, rng);
    spec.R = testing::random_pd(nu, rng);
    spec.N = 4;
    spec.x0 = rng.normal_vector(nx);
    spec.sigma_w = Matrix::Identity(nx, nx);

    const auto jac = gain_jacobians_wrt_estimate(est, spec);
    const Matrix theta0 = theta_matrix(est);
    for (int t = 0; t < spec.N; ++t) {
      for (int q = 0; q < nu; ++q) {
        for (int r = 0; r < nx; ++r) {
          const Matrix fd = testing::fd_gradient(
              [&](const Matrix& th) {
                return ce_gains(split_theta(th, nx), spec).gains[t](q, r);
              },
              theta0, 1e-6);
          for (int n = 0; n < p; ++n)
            for (int m = 0; m < nx; ++m) {
              const double analytic = jac[t](q + r * nu, m + n * nx);
              const double reference = fd(m, n);
              if (std::max(std::abs(analytic), std::abs(reference)) <= 1e-7) continue;
              CHECK(testing::rel_err(analytic, reference) <= 1e-5);
            }
        }
      }
    }
  }
}

TEST_CASE("estimate adjoint equals the explicit Jacobian contraction") {
  Rng rng(13);
  const int nx = 3, nu = 2, p = nx + nu;
  const SystemParams est = testing::random_stable_system(nx, nu, rng, 0.95);
  LqrSpec spec;
  spec.Q = testing::random_psd(nx, rng);
  spec.Q_N = testing::random_psd(nx, rng);
  spec.R = testing::random_pd(nu, rng);
  spec.N = 6;
  spec.x0 = rng.normal_vector(nx);
  spec.sigma_w = 0.1 * Matrix::Identity(nx, nx);

  std::vector<Matrix> dJdK(spec.N);
  for (auto& g : dJdK) g = rng.normal_matrix(nu, nx);

  const Matrix adj = estimate_adjoint(est, spec, dJdK);
  const auto jac = gain_jacobians_wrt_estimate(est, spec);
  Matrix expected = Matrix::Zero(nx, p);
  for (int t = 0; t < spec.N; ++t) {
    const Vector contracted = jac[t].transpose() * vectorize(dJdK[t]);
    expected += devectorize(contracted, nx, p);
  }
  CHECK((adj - expected).cwiseAbs().maxCoeff() <=
        1e-12 * std::max(1.0, expected.cwiseAbs().maxCoeff()));
}

TEST_CASE("posterior input jacobian: matches finite differences (car string)") {
  DesignProblem problem = two_car_problem(4);
  const int horizon = 4;
  Rng rng(17);
  Rng draw(18);
  const SystemParams theta = sample_theta(problem.prior, draw);
  const NoiseBlock noise = sample_noise(problem.prior.noise_cov, horizon, draw);
  const Matrix u = 0.5 * rng.normal_matrix(problem.nu(), horizon);

  const SampleContext ctx = make_sample_context(problem.prior, theta, noise, u, problem.lqr.x0,
                                                problem.alpha1, problem.alpha2);
  const Matrix jac = posterior_input_jacobian(ctx, problem.prior);

  const int nx = problem.nx(), p = nx + problem.nu();
  for (int m = 0; m < nx; ++m) {
    for (int n = 0; n < p; ++n) {
      const Matrix fd = testing::fd_gradient(
          [&](const Matrix& uu) {
            const StateTrajectory traj = rollout(theta, uu, noise, problem.lqr.x0);
            return posterior(problem.prior, make_dataset(traj, uu), problem.alpha1,
                             problem.alpha2)
                .mean(m, n);
          },
          u, 1e-6);
      const Matrix analytic =
          devectorize(jac.row(m + n * nx).transpose(), problem.nu(), horizon);
      CHECK(testing::max_rel_err(analytic, fd, 1e-7) <= 1e-4);
    }
  }
}

TEST_CASE("posterior input jacobian: B = 0 with flat weights keeps only direct terms") {
  DesignProblem problem = two_car_problem(3);
  problem.alpha2 = 1e-12;  // essentially constant weights
  Rng draw(21);
  SystemParams theta = sample_theta(problem.prior, draw);
  theta.B.setZero();
  const int horizon = 3;
  const NoiseBlock noise = sample_noise(problem.prior.noise_cov, horizon, draw);
  Rng rng(22);
  const Matrix u = rng.normal_matrix(problem.nu(), horizon);

  const SampleContext ctx = make_sample_context(problem.prior, theta, noise, u, problem.lqr.x0,
                                                problem.alpha1, problem.alpha2);
  const Matrix jac = posterior_input_jacobian(ctx, problem.prior);

  const int nx = problem.nx(), p = nx + problem.nu();
  for (int m = 0; m < nx; ++m) {
    for (int n = 0; n < p; ++n) {
      const Matrix fd = testing::fd_gradient(
          [&](const Matrix& uu) {
            const StateTrajectory traj = rollout(theta, uu, noise, problem.lqr.x0);
            return posterior(problem.prior, make_dataset(traj, uu), problem.alpha1,
                             problem.alpha2)
                .mean(m, n);
          },
          u, 1e-6);
      const Matrix analytic =
          devectorize(jac.row(m + n * nx).transpose(), problem.nu(), horizon);
      CHECK(testing::max_rel_err(analytic, fd, 1e-7) <= 1e-4);
    }
  }
}

TEST_CASE("posterior input jacobian: prior-dominated limit is flat") {
  DesignProblem problem = two_car_problem(3);
  problem.prior.col_precision = 1e6 * Matrix::Identity(5, 5);
  Rng draw(25);
  const SystemParams theta = sample_theta(problem.prior, draw);
  const NoiseBlock noise = sample_noise(problem.prior.noise_cov, 1, draw);
  Rng rng(26);
  const Matrix u = rng.normal_matrix(problem.nu(), 1);
  const SampleContext ctx = make_sample_context(problem.prior, theta, noise, u, problem.lqr.x0,
                                                problem.alpha1, problem.alpha2);
  const Matrix jac = posterior_input_jacobian(ctx, problem.prior);
  CHECK(jac.cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("adjoint route equals the full-Jacobian contraction") {
  DesignProblem problem = two_car_problem(4);
  const int horizon = 6;
  Rng draw(29);
  const SystemParams theta = sample_theta(problem.prior, draw);
  const NoiseBlock noise = sample_noise(problem.prior.noise_cov, horizon, draw);
  Rng rng(30);
  const Matrix u = rng.normal_matrix(problem.nu(), horizon);
  const SampleContext ctx = make_sample_context(problem.prior, theta, noise, u, problem.lqr.x0,
                                                problem.alpha1, problem.alpha2);

  const int nx = problem.nx(), p = nx + problem.nu();
  const Matrix adjoint = rng.normal_matrix(nx, p);

  const Matrix via_adjoint = input_gradient_from_estimate_adjoint(ctx, adjoint);
  const Matrix jac = posterior_input_jacobian(ctx, problem.prior);
  const Matrix via_jacobian =
      devectorize(jac.transpose() * vectorize(adjoint), problem.nu(), horizon);
  CHECK((via_adjoint - via_jacobian).cwiseAbs().maxCoeff() <=
        1e-10 * std::max(1.0, via_jacobian.cwiseAbs().maxCoeff()));
}

TEST_CASE("sample gradient: zero objective gives exactly zero") {
  DesignProblem problem = two_car_problem(4);
  problem.lqr.Q.setZero();
  problem.lqr.Q_N.setZero();
  Rng draw(33);
  const SystemParams theta = sample_theta(problem.prior, draw);
  const NoiseBlock noise = sample_noise(problem.prior.noise_cov, 5, draw);
  Rng rng(34);
  const Matrix u = rng.normal_matrix(problem.nu(), 5);
  const SampleGradient g = sample_gradient(problem, theta, noise, u);
  CHECK(g.dJ_dU.norm() == 0.0);
}

TEST_CASE("sample gradient: matches end-to-end finite differences") {
  DesignProblem problem = two_car_problem(5);
  const int horizon = 5;
  Rng draw(37);
  for (int trial = 0; trial < 4; ++trial) {
    Rng sub = draw.substream(trial);
    const SystemParams theta = sample_theta(problem.prior, sub);
    const NoiseBlock noise = sample_noise(problem.prior.noise_cov, horizon, sub);
    const Matrix u = 0.3 * sub.normal_matrix(problem.nu(), horizon);

    const SampleGradient g = sample_gradient(problem, theta, noise, u);
    const Matrix fd = testing::fd_gradient(
        [&](const Matrix& uu) { return per_sample_objective(problem, theta, noise, uu); }, u,
        1e-5);
    CHECK(testing::max_rel_err(g.dJ_dU, fd, 1e-8) <= 1e-4);
  }
}

TEST_CASE("sample gradient: locally Lipschitz in U") {
  DesignProblem problem = two_car_problem(5);
  const int horizon = 5;
  Rng draw(41);
  const SystemParams theta = sample_theta(problem.prior, draw);
  const NoiseBlock noise = sample_noise(problem.prior.noise_cov, horizon, draw);
  Rng rng(42);
  const Matrix u = rng.normal_matrix(problem.nu(), horizon);
  const Matrix g0 = sample_gradient(problem, theta, noise, u).dJ_dU;

  double ratio_max = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix du = 1e-4 * rng.normal_matrix(problem.nu(), horizon);
    const Matrix g1 = sample_gradient(problem, theta, noise, u + du).dJ_dU;
    ratio_max = std::max(ratio_max, (g1 - g0).norm() / du.norm());
  }
  const Matrix g_far = sample_gradient(problem, theta, noise, u + Matrix::Constant(problem.nu(), horizon, 0.1)).dJ_dU;
  (void)g_far;
  // The difference quotient stays bounded as 'du' shrinks.
  for (int k = 1; k <= 3; ++k) {
    const Matrix du = std::pow(10.0, -4 - k) * rng.normal_matrix(problem.nu(), horizon);
    const Matrix g1 = sample_gradient(problem, theta, noise, u + du).dJ_dU;
    CHECK((g1 - g0).norm() / du.norm() <= 10.0 * std::max(1.0, ratio_max));
  }
}

TEST_CASE("pathwise estimate: batch of one equals a single sample") {
  DesignProblem problem = two_car_problem(4);
  const int horizon = 4;
  Rng rng(45);
  const Matrix u = rng.normal_matrix(problem.nu(), horizon);
  const std::uint64_t seed = 777;

  const PathwiseEstimate est = pathwise_estimate(problem, u, 1, seed);

  const ExperimentSampler sampler(problem.prior);
  Rng sub = Rng(seed).substream(0);
  const SystemParams theta = sampler.sample_theta(sub);
  const NoiseBlock noise = sampler.sample_noise(horizon, sub);
  const SampleGradient g = sample_gradient(problem, theta, noise, u);
  CHECK((est.mean_gradient - g.dJ_dU).norm() == 0.0);
  CHECK(est.sample_norms.size() == 1);
  CHECK(est.sample_norms[0] == g.dJ_dU.norm());
}

TEST_CASE("pathwise estimate: variance shrinks like 1/L") {
  const DesignProblem problem = scalar_problem(3);
  Rng rng(49);
  const Matrix u = rng.normal_matrix(1, 3);

  auto entry_variance = [&](int batch, std::uint64_t tag) {
    const int reps = 160;
    std::vector<double> values(reps);
    for (int r = 0; r < reps; ++r)
      values[r] = pathwise_estimate(problem, u, batch, mix_seed(tag, r)).mean_gradient(0, 0);
    return testing::variance_of(values);
  };
  const double v100 = entry_variance(100, 0xAA);
  const double v400 = entry_variance(400, 0xBB);
  const double ratio = v100 / v400;
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.5);
}

TEST_CASE("pathwise estimate: agrees with common-random-number finite differences") {
  const DesignProblem problem = scalar_problem(3);
  Rng rng(53);
  const Matrix u = rng.normal_matrix(1, 3);
  const int batch = 10000;
  const std::uint64_t seed = 4242;

  const PathwiseEstimate est = pathwise_estimate(problem, u, batch, seed);

  const ExperimentSampler sampler(problem.prior);
  auto smoothed_objective = [&](const Matrix& uu) {
    const Rng base(seed);
    double sum = 0.0;
    for (int i = 0; i < batch; ++i) {
      Rng sub = base.substream(i);
      const SystemParams theta = sampler.sample_theta(sub);
      const NoiseBlock noise = sampler.sample_noise(3, sub);
      sum += per_sample_objective(problem, theta, noise, uu);
    }
    return sum / batch;
  };
  const Matrix fd = testing::fd_gradient(smoothed_objective, u, 1e-5);
  CHECK(testing::max_rel_err(est.mean_gradient, fd, 1e-8) <= 1e-3);
}

TEST_CASE("pathwise estimate: identical for any worker count") {
  DesignProblem problem = two_car_problem(3);
  Rng rng(57);
  const Matrix u = rng.normal_matrix(problem.nu(), 4);

  const int saved = worker_count();
  set_worker_count(1);
  const PathwiseEstimate a = pathwise_estimate(problem, u, 37, 99);
  set_worker_count(4);
  const PathwiseEstimate b = pathwise_estimate(problem, u, 37, 99);
  set_worker_count(saved);

  CHECK((a.mean_gradient - b.mean_gradient).norm() == 0.0);
  CHECK(a.sample_norms == b.sample_norms);
}

}  // TEST_SUITE
