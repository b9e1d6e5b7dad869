#include "coed/designer.hpp"

#include <charconv>
#include <chrono>
#include <cmath>

#include "coed/estimator.hpp"
#include "coed/lqr.hpp"
#include "coed/parallel.hpp"
#include "coed/sim.hpp"

namespace coed {

namespace {

void validate_config(const DesignConfig& c) {
  COED_REQUIRE(c.eta0 > 0.0, "DesignConfig: eta0 must be positive");
  COED_REQUIRE(c.decay > 0.0 && c.decay <= 1.0, "DesignConfig: decay must be in (0, 1]");
  COED_REQUIRE(c.batch >= 1, "DesignConfig: batch must be >= 1");
  COED_REQUIRE(c.max_iters >= 1, "DesignConfig: max_iters must be >= 1");
  COED_REQUIRE(c.grad_window >= 1 && c.grad_window <= c.max_iters,
               "DesignConfig: grad_window must be in [1, max_iters]");
  COED_REQUIRE(c.grad_tol > 0.0, "DesignConfig: grad_tol must be positive");
  COED_REQUIRE(c.beta >= 0.0, "DesignConfig: beta must be non-negative");
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Evaluation summarize(std::vector<double> samples) {
  Evaluation ev;
  const int n = static_cast<int>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  ev.mean = sum / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - ev.mean) * (v - ev.mean);
  const double sd = std::sqrt(ss / (n - 1));
  ev.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(n));
  ev.samples = std::move(samples);
  return ev;
}

}  // namespace

Matrix project(const Matrix& u, double beta) {
  COED_REQUIRE(beta >= 0.0, "project: beta must be non-negative");
  const double norm = u.norm();
  if (norm <= beta) return u;
  if (beta == 0.0) return Matrix::Zero(u.rows(), u.cols());
  Matrix v = u * (beta / norm);
  // Rescaling can overshoot by an ulp; nudge until the result is feasible so
  // a second projection is the identity.
  for (int guard = 0; guard < 4 && v.norm() > beta; ++guard) v *= beta / v.norm();
  return v;
}

Matrix initial_plan(int nu, int horizon, double beta, std::uint64_t seed) {
  COED_REQUIRE(nu >= 1 && horizon >= 1, "initial_plan: dimensions must be positive");
  Rng rng(seed);
  Matrix u(nu, horizon);
  for (int j = 0; j < horizon; ++j)
    for (int i = 0; i < nu; ++i) u(i, j) = rng.uniform(1e-3, 1e-2);
  return project(u, beta);
}

DesignResult projected_sgd(const MatrixNormalPrior& prior, const DesignConfig& config, Matrix u0,
                           const PerSampleGradient& fn) {
  validate_config(config);
  const auto t0 = std::chrono::steady_clock::now();

  Matrix u = project(std::move(u0), config.beta);
  DesignResult out;
  out.trace.rows.reserve(config.max_iters);

  std::vector<double> grad_norms;
  grad_norms.reserve(config.max_iters);
  double first_norm = 0.0;
  double window_sum = 0.0;

  for (int i = 0; i < config.max_iters; ++i) {
    PathwiseEstimate est;
    try {
      est = batch_gradient(prior, u, config.batch, mix_seed(config.seed, i), fn);
    } catch (const std::exception& e) {
      throw std::runtime_error("design: gradient failure at iteration " + std::to_string(i + 1) +
                               ": " + e.what());
    }
    const double gnorm = est.mean_gradient.norm();
    COED_CHECK(std::isfinite(gnorm),
               "design: non-finite gradient at iteration " + std::to_string(i + 1));

    const double eta = config.eta0 * std::pow(config.decay, i);
    u = project(u - eta * est.mean_gradient, config.beta);

    grad_norms.push_back(gnorm);
    window_sum += gnorm;
    if (static_cast<int>(grad_norms.size()) > config.grad_window)
      window_sum -= grad_norms[grad_norms.size() - 1 - config.grad_window];
    if (i == 0) first_norm = gnorm;

    out.trace.rows.push_back(TraceRow{i + 1, gnorm, u.norm(), eta, seconds_since(t0)});

    const int window = std::min<int>(config.grad_window, static_cast<int>(grad_norms.size()));
    const double window_avg = window_sum / window;
    if (std::isinf(config.grad_tol) || window_avg <= config.grad_tol * first_norm) {
      out.trace.converged = true;
      break;
    }
  }
  out.trace.iterations = static_cast<int>(out.trace.rows.size());
  out.plan = ExperimentPlan{std::move(u), config.beta};
  return out;
}

DesignResult design(const DesignProblem& problem, const DesignConfig& config, const Matrix& u0) {
  validate_lqr_spec(problem.lqr);
  COED_REQUIRE(u0.rows() == problem.nu(), "design: initial plan rows must equal n_u");
  return projected_sgd(problem.prior, config, u0,
                       [&problem](const SystemParams& theta, const NoiseBlock& noise,
                                  const Matrix& u) {
                         return sample_gradient(problem, theta, noise, u).dJ_dU;
                       });
}

Evaluation evaluate_objective(const DesignProblem& problem, const Matrix& u, int n_samples,
                              std::uint64_t seed) {
  COED_REQUIRE(n_samples >= 2, "evaluate_objective: need at least two samples");
  validate_lqr_spec(problem.lqr);
  const ExperimentSampler sampler(problem.prior);
  const int horizon = static_cast<int>(u.cols());
  const Rng base(seed);

  std::vector<double> samples(n_samples);
  parallel_chunks(n_samples, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Rng rng = base.substream(static_cast<std::uint64_t>(i));
      const SystemParams theta = sampler.sample_theta(rng);
      const NoiseBlock noise = sampler.sample_noise(horizon, rng);
      const StateTrajectory traj = rollout(theta, u, noise, problem.lqr.x0);
      const Posterior post = posterior(problem.prior, make_dataset(traj, u), problem.alpha1,
                                       problem.alpha2);
      const PolicyGains policy = ce_gains(split_theta(post.mean, problem.nx()), problem.lqr);
      samples[i] = policy_cost(theta, policy, problem.lqr);
    }
  });
  return summarize(std::move(samples));
}

Evaluation evaluate_known_theta_bound(const DesignProblem& problem, int n_samples,
                                      std::uint64_t seed) {
  COED_REQUIRE(n_samples >= 2, "evaluate_known_theta_bound: need at least two samples");
  validate_lqr_spec(problem.lqr);
  const ExperimentSampler sampler(problem.prior);
  const Rng base(seed);

  std::vector<double> samples(n_samples);
  parallel_chunks(n_samples, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Rng rng = base.substream(static_cast<std::uint64_t>(i));
      const SystemParams theta = sampler.sample_theta(rng);
      samples[i] = known_theta_cost(theta, problem.lqr);
    }
  });
  return summarize(std::move(samples));
}

Evaluation evaluate_prior_mean_policy(const DesignProblem& problem, int n_samples,
                                      std::uint64_t seed) {
  COED_REQUIRE(n_samples >= 2, "evaluate_prior_mean_policy: need at least two samples");
  validate_lqr_spec(problem.lqr);
  const PolicyGains policy =
      ce_gains(split_theta(problem.prior.mean, problem.nx()), problem.lqr);
  const ExperimentSampler sampler(problem.prior);
  const Rng base(seed);

  std::vector<double> samples(n_samples);
  parallel_chunks(n_samples, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Rng rng = base.substream(static_cast<std::uint64_t>(i));
      const SystemParams theta = sampler.sample_theta(rng);
      samples[i] = policy_cost(theta, policy, problem.lqr);
    }
  });
  return summarize(std::move(samples));
}

std::string trace_to_csv(const DesignTrace& trace) {
  std::string out = "iter,grad_norm,u_norm,eta,elapsed_s\n";
  char buf[32];
  auto append = [&out, &buf](double v, char sep) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    out.append(buf, ptr);
    out.push_back(sep);
  };
  for (const TraceRow& r : trace.rows) {
    out += std::to_string(r.iter);
    out.push_back(',');
    append(r.grad_norm, ',');
    append(r.u_norm, ',');
    append(r.eta, ',');
    append(r.elapsed_s, '\n');
  }
  return out;
}

}  // namespace coed
