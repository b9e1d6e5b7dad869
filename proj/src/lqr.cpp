#include "coed/lqr.hpp"

namespace coed {

namespace {

void require_sym_with_floor(const Matrix& m, double floor, const char* what) {
  COED_REQUIRE(m.rows() == m.cols(), std::string(what) + ": not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  COED_REQUIRE((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
               std::string(what) + ": not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  COED_REQUIRE(eig.eigenvalues().minCoeff() >= floor, std::string(what) + ": eigenvalue below threshold");
}

void check_dimensions(const SystemParams& sys, const LqrSpec& spec, const char* what) {
  COED_REQUIRE(sys.A.rows() == sys.A.cols(), std::string(what) + ": A must be square");
  COED_REQUIRE(sys.B.rows() == sys.A.rows(), std::string(what) + ": B rows must match A");
  COED_REQUIRE(spec.Q.rows() == sys.nx() && spec.Q_N.rows() == sys.nx(),
               std::string(what) + ": Q/Q_N dimension mismatch");
  COED_REQUIRE(spec.R.rows() == sys.nu(), std::string(what) + ": R dimension mismatch");
  COED_REQUIRE(spec.N >= 1, std::string(what) + ": horizon must be >= 1");
}

}  // namespace

void validate_lqr_spec(const LqrSpec& spec) {
  require_sym_with_floor(spec.Q, -1e-9 * std::max(1.0, spec.Q.cwiseAbs().maxCoeff()), "Q");
  require_sym_with_floor(spec.Q_N, -1e-9 * std::max(1.0, spec.Q_N.cwiseAbs().maxCoeff()), "Q_N");
  require_sym_with_floor(spec.R, 1e-12 * std::max(1.0, spec.R.cwiseAbs().maxCoeff()), "R");
  COED_REQUIRE(spec.N >= 1, "LqrSpec: horizon must be >= 1");
  COED_REQUIRE(spec.x0.size() == spec.Q.rows(), "LqrSpec: x0 dimension mismatch");
  COED_REQUIRE(spec.sigma_w.rows() == spec.Q.rows() && spec.sigma_w.cols() == spec.Q.rows(),
               "LqrSpec: sigma_w dimension mismatch");
}

PolicyGains ce_gains(const SystemParams& estimate, const LqrSpec& spec) {
  check_dimensions(estimate, spec, "ce_gains");
  const auto& A = estimate.A;
  const auto& B = estimate.B;

  PolicyGains policy;
  policy.gains.resize(spec.N);
  policy.values.resize(spec.N + 1);
  policy.values[spec.N] = spec.Q_N;

  for (int t = spec.N - 1; t >= 0; --t) {
    const Matrix& p_next = policy.values[t + 1];
    const Matrix bt_p = B.transpose() * p_next;
    Matrix m = spec.R + bt_p * B;
    m = 0.5 * (m + m.transpose());
    Eigen::LLT<Matrix> llt(m);
    COED_CHECK(llt.info() == Eigen::Success, "ce_gains: R + B^T P B not positive definite");
    policy.gains[t] = -llt.solve(bt_p * A);
    const Matrix a_cl = A + B * policy.gains[t];
    Matrix p = spec.Q + policy.gains[t].transpose() * spec.R * policy.gains[t] +
               a_cl.transpose() * p_next * a_cl;
    policy.values[t] = 0.5 * (p + p.transpose());
  }
  return policy;
}

std::vector<Matrix> closed_loop_values(const SystemParams& truth, const PolicyGains& policy,
                                       const LqrSpec& spec) {
  check_dimensions(truth, spec, "closed_loop_values");
  COED_REQUIRE(policy.horizon() == spec.N, "closed_loop_values: policy horizon mismatch");

  std::vector<Matrix> values(spec.N + 1);
  values[spec.N] = spec.Q_N;
  for (int t = spec.N - 1; t >= 0; --t) {
    const Matrix& k = policy.gains[t];
    const Matrix a_cl = truth.A + truth.B * k;
    Matrix p = spec.Q + k.transpose() * spec.R * k + a_cl.transpose() * values[t + 1] * a_cl;
    values[t] = 0.5 * (p + p.transpose());
  }
  return values;
}

double policy_cost(const SystemParams& truth, const PolicyGains& policy, const LqrSpec& spec) {
  const std::vector<Matrix> values = closed_loop_values(truth, policy, spec);
  double cost = spec.x0.dot(values[0] * spec.x0);
  for (int t = 0; t < spec.N; ++t) cost += (values[t + 1] * spec.sigma_w).trace();
  return cost;
}

double known_theta_cost(const SystemParams& truth, const LqrSpec& spec) {
  return policy_cost(truth, ce_gains(truth, spec), spec);
}

}  // namespace coed
