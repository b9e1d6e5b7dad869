#include "coed/baselines.hpp"

#include <cmath>

#include "coed/estimator.hpp"
#include "coed/lqr.hpp"
#include "coed/model.hpp"
#include "coed/parallel.hpp"
#include "coed/sim.hpp"

namespace coed {

namespace {

// Optimality gap of the fixed policy on the system encoded by vec(Theta).
double optimality_gap(const Vector& theta_vec, int nx, const PolicyGains& policy,
                      const LqrSpec& spec) {
  const SystemParams sys =
      split_theta(devectorize(theta_vec, nx, static_cast<int>(theta_vec.size()) / nx), nx);
  return policy_cost(sys, policy, spec) - known_theta_cost(sys, spec);
}

}  // namespace

WeightSpec a_optimal_weight(int nx, int nu) {
  const int d = nx * (nx + nu);
  return WeightSpec{BaselineKind::kAOptimal, 0.0, Matrix::Identity(d, d)};
}

WeightSpec l_optimal_weight(const DesignProblem& problem, const PolicyGains& policy_at_mean,
                            double mu_floor, double fd_step_rel) {
  validate_lqr_spec(problem.lqr);
  COED_REQUIRE(mu_floor > 0.0, "l_optimal_weight: mu_floor must be positive");
  COED_REQUIRE(fd_step_rel > 0.0, "l_optimal_weight: fd_step_rel must be positive");
  const int nx = problem.nx();
  const Vector theta0 = vectorize(problem.prior.mean);
  const int d = static_cast<int>(theta0.size());

  auto gap = [&](const Vector& v) { return optimality_gap(v, nx, policy_at_mean, problem.lqr); };
  Vector steps(d);
  for (int a = 0; a < d; ++a) steps(a) = fd_step_rel * std::max(1.0, std::abs(theta0(a)));

  // Full central-difference Hessian; both triangles are computed independently
  // so the symmetry check below the API has something real to measure.
  Matrix h(d, d);
  const double f0 = gap(theta0);
  for (int a = 0; a < d; ++a) {
    Vector vp = theta0, vm = theta0;
    vp(a) += steps(a);
    vm(a) -= steps(a);
    h(a, a) = (gap(vp) - 2.0 * f0 + gap(vm)) / (steps(a) * steps(a));
  }
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      if (a == b) continue;
      Vector vpp = theta0, vpm = theta0, vmp = theta0, vmm = theta0;
      vpp(a) += steps(a), vpp(b) += steps(b);
      vpm(a) += steps(a), vpm(b) -= steps(b);
      vmp(a) -= steps(a), vmp(b) += steps(b);
      vmm(a) -= steps(a), vmm(b) -= steps(b);
      h(a, b) = (gap(vpp) - gap(vpm) - gap(vmp) + gap(vmm)) / (4.0 * steps(a) * steps(b));
    }
  }
  COED_CHECK(h.allFinite(), "l_optimal_weight: non-finite Hessian entries");

  Matrix h_sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h_sym, Eigen::EigenvaluesOnly);
  const double mu = std::max(0.0, -eig.eigenvalues().minCoeff()) + mu_floor;
  h_sym += mu * Matrix::Identity(d, d);
  // Eigenvalues of the shifted matrix are only reproducible to ~||H|| * eps,
  // which at this Hessian's scale can undershoot the floor on re-evaluation;
  // bump until the matrix actually returned clears it with margin.
  for (int pass = 0; pass < 3; ++pass) {
    Eigen::SelfAdjointEigenSolver<Matrix> check(h_sym, Eigen::EigenvaluesOnly);
    const double lmax = std::max(1.0, check.eigenvalues().cwiseAbs().maxCoeff());
    const double margin = std::max(1e-12, 1e-14 * lmax);
    const double lmin = check.eigenvalues().minCoeff();
    if (lmin >= mu_floor + margin) break;
    h_sym += (mu_floor + 2.0 * margin - lmin) * Matrix::Identity(d, d);
  }
  return WeightSpec{BaselineKind::kLOptimal, mu_floor, std::move(h_sym)};
}

WeightSpec make_weight_spec(const DesignProblem& problem, BaselineKind kind, double mu_floor) {
  if (kind == BaselineKind::kAOptimal) return a_optimal_weight(problem.nx(), problem.nu());
  const PolicyGains policy =
      ce_gains(split_theta(problem.prior.mean, problem.nx()), problem.lqr);
  return l_optimal_weight(problem, policy, mu_floor);
}

double baseline_objective_sample(const DesignProblem& problem, const SystemParams& theta,
                                 const NoiseBlock& noise, const Matrix& u,
                                 const WeightSpec& weight) {
  const StateTrajectory traj = rollout(theta, u, noise, problem.lqr.x0);
  const Posterior post =
      posterior(problem.prior, make_dataset(traj, u), problem.alpha1, problem.alpha2);
  const Vector err = vectorize(post.mean) - vectorize(theta_matrix(theta));
  return err.dot(weight.H * err);
}

Matrix baseline_sample_gradient(const DesignProblem& problem, const SystemParams& theta,
                                const NoiseBlock& noise, const Matrix& u,
                                const WeightSpec& weight) {
  const SampleContext ctx = make_sample_context(problem.prior, theta, noise, u, problem.lqr.x0,
                                                problem.alpha1, problem.alpha2);
  const Vector err = vectorize(ctx.post.mean) - vectorize(theta_matrix(theta));
  const Matrix adjoint =
      devectorize(2.0 * (weight.H * err), problem.nx(), problem.nx() + problem.nu());
  return input_gradient_from_estimate_adjoint(ctx, adjoint);
}

DesignResult design_baseline(const DesignProblem& problem, const DesignConfig& config,
                             const Matrix& u0, const WeightSpec& weight) {
  validate_lqr_spec(problem.lqr);
  const int d = problem.nx() * (problem.nx() + problem.nu());
  COED_REQUIRE(weight.H.rows() == d && weight.H.cols() == d,
               "design_baseline: weight dimension mismatch");
  return projected_sgd(problem.prior, config, u0,
                       [&problem, &weight](const SystemParams& theta, const NoiseBlock& noise,
                                           const Matrix& u) {
                         return baseline_sample_gradient(problem, theta, noise, u, weight);
                       });
}

DesignResult design_baseline(const DesignProblem& problem, const DesignConfig& config,
                             const Matrix& u0, BaselineKind kind) {
  const WeightSpec weight = make_weight_spec(problem, kind);
  return design_baseline(problem, config, u0, weight);
}

Evaluation evaluate_baseline_objective(const DesignProblem& problem, const Matrix& u,
                                       const WeightSpec& weight, int n_samples,
                                       std::uint64_t seed) {
  COED_REQUIRE(n_samples >= 2, "evaluate_baseline_objective: need at least two samples");
  const ExperimentSampler sampler(problem.prior);
  const int horizon = static_cast<int>(u.cols());
  const Rng base(seed);

  std::vector<double> samples(n_samples);
  parallel_chunks(n_samples, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Rng rng = base.substream(static_cast<std::uint64_t>(i));
      const SystemParams theta = sampler.sample_theta(rng);
      const NoiseBlock noise = sampler.sample_noise(horizon, rng);
      samples[i] = baseline_objective_sample(problem, theta, noise, u, weight);
    }
  });

  Evaluation ev;
  double sum = 0.0;
  for (double v : samples) sum += v;
  ev.mean = sum / n_samples;
  double ss = 0.0;
  for (double v : samples) ss += (v - ev.mean) * (v - ev.mean);
  ev.ci95 = 1.96 * std::sqrt(ss / (n_samples - 1)) / std::sqrt(static_cast<double>(n_samples));
  ev.samples = std::move(samples);
  return ev;
}

}  // namespace coed
