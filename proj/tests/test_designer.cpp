#include <doctest.h>

#include <algorithm>
#include <limits>

#include "coed/designer.hpp"
#include "coed/harness.hpp"
#include "coed/lqr.hpp"
#include "coed/model.hpp"
#include "oracles.hpp"

using namespace coed;

namespace {

DesignProblem scalar_problem() {
  // Wide enough prior that the experiment is worth running, narrow enough
  // that the cost distribution keeps usable confidence intervals.
  DesignProblem problem;
  problem.prior.mean = Matrix::Zero(1, 2);
  problem.prior.mean << 0.7, 0.4;
  problem.prior.col_precision = Matrix::Identity(2, 2);
  problem.prior.noise_cov = Matrix::Constant(1, 1, 0.04);
  problem.lqr.Q = Matrix::Identity(1, 1);
  problem.lqr.Q_N = Matrix::Identity(1, 1);
  problem.lqr.R = Matrix::Identity(1, 1);
  problem.lqr.N = 8;
  problem.lqr.x0 = Vector::Constant(1, 2.0);
  problem.lqr.sigma_w = Matrix::Constant(1, 1, 0.04);
  return problem;
}

}  // namespace

TEST_SUITE("designer") {

TEST_CASE("project: feasible input is returned untouched") {
  Rng rng(3);
  Matrix u = rng.normal_matrix(2, 5);
  const double beta = 2.0 * u.norm();
  const Matrix v = project(u, beta);
  CHECK((u - v).norm() == 0.0);
}

TEST_CASE("project: infeasible input lands on the sphere, direction preserved") {
  Rng rng(5);
  Matrix u = rng.normal_matrix(3, 4);
  const double beta = 0.5 * u.norm();
  const Matrix v = project(u, beta);
  CHECK(v.norm() == doctest::Approx(beta).epsilon(1e-12));
  const double cosine = vectorize(u).dot(vectorize(v)) / (u.norm() * v.norm());
  CHECK(cosine == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("project: idempotent bit-for-bit") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix u = rng.normal_matrix(3, 6);
    const double beta = rng.uniform(0.0, 2.0) * u.norm() + 1e-9;
    const Matrix once = project(u, beta);
    const Matrix twice = project(once, beta);
    CHECK((once - twice).norm() == 0.0);
    CHECK(once.norm() <= beta);
  }
  CHECK(project(rng.normal_matrix(2, 2), 0.0).norm() == 0.0);
}

TEST_CASE("initial plan: entries in [1e-3, 1e-2] before projection") {
  const Matrix u = initial_plan(3, 20, 1e9, 99);
  CHECK(u.minCoeff() >= 1e-3);
  CHECK(u.maxCoeff() <= 1e-2);
  const Matrix tight = initial_plan(3, 20, 1e-4, 99);
  CHECK(tight.norm() <= 1e-4 * (1 + 1e-12));
}

TEST_CASE("design: infinite tolerance stops after one exact projected step") {
  const DesignProblem problem = scalar_problem();
  DesignConfig cfg;
  cfg.eta0 = 0.02;
  cfg.batch = 16;
  cfg.max_iters = 50;
  cfg.grad_window = 5;
  cfg.grad_tol = std::numeric_limits<double>::infinity();
  cfg.beta = 4.0;
  cfg.seed = 321;

  const Matrix u0 = initial_plan(1, 3, cfg.beta, 11);
  const DesignResult res = design(problem, cfg, u0);
  CHECK(res.trace.iterations == 1);
  CHECK(res.trace.converged);

  // Reconstruct the single step by hand from the documented seeding scheme.
  const Matrix u_proj = project(u0, cfg.beta);
  const PathwiseEstimate est =
      pathwise_estimate(problem, u_proj, cfg.batch, mix_seed(cfg.seed, 0));
  const Matrix expected = project(u_proj - cfg.eta0 * est.mean_gradient, cfg.beta);
  CHECK((res.plan.U - expected).norm() == 0.0);
}

TEST_CASE("design: improves the scalar objective significantly") {
  const DesignProblem problem = scalar_problem();
  DesignConfig cfg;
  cfg.eta0 = 4.0;
  cfg.decay = 0.98;
  cfg.batch = 64;
  cfg.max_iters = 200;
  cfg.grad_window = 30;
  cfg.grad_tol = 1e-4;
  cfg.beta = 2.0;
  cfg.seed = 5;

  const Matrix u0 = initial_plan(1, 3, cfg.beta, 17);
  const DesignResult res = design(problem, cfg, u0);

  const int n = 100000;
  const Evaluation before = evaluate_objective(problem, u0, n, 900);
  const Evaluation after = evaluate_objective(problem, res.plan.U, n, 900);
  CHECK(after.mean + after.ci95 < before.mean - before.ci95);
}

TEST_CASE("design: budget constraint is active at convergence (car string)") {
  RunConfig cfg = paper_carstring_preset();
  const DesignProblem problem = build_problem(cfg.problem);
  DesignConfig dc;
  dc.batch = 32;
  dc.max_iters = 120;
  dc.grad_window = 40;
  dc.grad_tol = 1e-6;
  dc.beta = 5.0;
  dc.seed = 12;
  const Matrix u0 = initial_plan(problem.nu(), 10, dc.beta, 34);
  const DesignResult res = design(problem, dc, u0);
  CHECK(std::abs(res.plan.U.norm() - dc.beta) <= 1e-9 * dc.beta);
}

TEST_CASE("design: every iterate is feasible and runs are reproducible") {
  const DesignProblem problem = scalar_problem();
  DesignConfig cfg;
  cfg.batch = 16;
  cfg.max_iters = 25;
  cfg.grad_window = 10;
  cfg.grad_tol = 1e-9;
  cfg.beta = 1.5;
  cfg.seed = 77;
  const Matrix u0 = initial_plan(1, 3, cfg.beta, 8);

  const DesignResult a = design(problem, cfg, u0);
  const DesignResult b = design(problem, cfg, u0);
  CHECK((a.plan.U - b.plan.U).norm() == 0.0);
  CHECK(a.plan.beta == cfg.beta);
  REQUIRE(a.trace.rows.size() == b.trace.rows.size());
  for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
    CHECK(a.trace.rows[i].grad_norm == b.trace.rows[i].grad_norm);
    CHECK(a.trace.rows[i].u_norm == b.trace.rows[i].u_norm);
    CHECK(a.trace.rows[i].eta == b.trace.rows[i].eta);
    CHECK(a.trace.rows[i].u_norm <= cfg.beta * (1 + 1e-12));
  }
}

TEST_CASE("design: a small exact-gradient step never increases the deterministic surrogate") {
  // Point prior plus vanishing noise makes the per-sample objective
  // deterministic, so the batch gradient is exact.
  DesignProblem problem = scalar_problem();
  problem.prior.col_precision = 1e12 * Matrix::Identity(2, 2);
  problem.prior.noise_cov = Matrix::Constant(1, 1, 1e-24);
  problem.lqr.sigma_w = Matrix::Constant(1, 1, 1e-24);

  Rng rng(41);
  const Matrix u = rng.normal_matrix(1, 3);
  const double beta = 10.0;
  const Matrix g = pathwise_estimate(problem, u, 4, 3).mean_gradient;
  const double j0 = evaluate_objective(problem, u, 4, 3).mean;

  double eta = 0.01;
  bool descended = false;
  for (int k = 0; k < 12 && !descended; ++k, eta *= 0.5) {
    const double j1 = evaluate_objective(problem, project(u - eta * g, beta), 4, 3).mean;
    descended = j1 <= j0 * (1 + 1e-12);
  }
  CHECK(descended);
}

TEST_CASE("evaluate_objective: degenerate prior reduces to the known-theta cost") {
  DesignProblem problem = scalar_problem();
  problem.prior.col_precision = 1e24 * Matrix::Identity(2, 2);
  problem.prior.noise_cov = Matrix::Constant(1, 1, 1e-24);
  problem.lqr.sigma_w = Matrix::Constant(1, 1, 1e-24);

  Rng rng(43);
  const Matrix u = rng.normal_matrix(1, 3);
  const Evaluation ev = evaluate_objective(problem, u, 16, 5);
  const double expected = known_theta_cost(split_theta(problem.prior.mean, 1), problem.lqr);
  CHECK(ev.mean == doctest::Approx(expected).epsilon(1e-9));
  CHECK(ev.ci95 <= 1e-9 * std::abs(expected));
}

TEST_CASE("evaluate_objective: never beats the known-theta bound, sample by sample") {
  const DesignProblem problem = scalar_problem();
  Rng rng(47);
  const Matrix u = rng.normal_matrix(1, 3);
  const int n = 4000;
  const Evaluation obj = evaluate_objective(problem, u, n, 1212);
  const Evaluation bound = evaluate_known_theta_bound(problem, n, 1212);
  REQUIRE(obj.samples.size() == bound.samples.size());
  for (int i = 0; i < n; ++i) CHECK(obj.samples[i] >= bound.samples[i] - 1e-9);
  CHECK(obj.mean >= bound.mean);
}

TEST_CASE("trace CSV has the pinned header and one row per iteration") {
  DesignTrace trace;
  trace.rows.push_back(TraceRow{1, 2.5, 0.5, 0.01, 0.1});
  trace.rows.push_back(TraceRow{2, 1.25, 0.75, 0.0099, 0.2});
  const std::string csv = trace_to_csv(trace);
  CHECK(csv.rfind("iter,grad_norm,u_norm,eta,elapsed_s\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("1,2.5,0.5,0.01,") != std::string::npos);
}

}  // TEST_SUITE
