#include "coed/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace coed {

double clamp_sentinel(double v) {
  if (std::isnan(v)) return kStateSentinel;
  return std::clamp(v, -kStateSentinel, kStateSentinel);
}

Matrix clamp_states(const Matrix& x) {
  return x.unaryExpr([](double v) { return clamp_sentinel(v); });
}

double state_weight(const Vector& x, double alpha1, double alpha2) {
  COED_REQUIRE(alpha2 > 0.0, "state_weight: alpha2 must be positive");
  const double norm = clamp_states(x).norm();
  return 0.5 - std::atan((norm - alpha1) * alpha2) / std::numbers::pi;
}

Vector weight_vector(const Matrix& x, double alpha1, double alpha2) {
  COED_REQUIRE(alpha2 > 0.0, "weight_vector: alpha2 must be positive");
  Vector s(x.cols());
  for (int i = 0; i < x.cols(); ++i) s(i) = state_weight(x.col(i), alpha1, alpha2);
  return s;
}

Matrix weight_matrix(const Matrix& x, double alpha1, double alpha2) {
  return Matrix(weight_vector(x, alpha1, alpha2).asDiagonal());
}

Eigen::LLT<Matrix> spd_factor(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    // PD by construction, so this only fires on round-off; nudge and retry.
    const double jitter = 1e-12 * m.trace();
    llt.compute(m + jitter * Matrix::Identity(m.rows(), m.cols()));
    COED_CHECK(llt.info() == Eigen::Success,
               std::string(what) + ": symmetric PD factorization failed");
  }
  return llt;
}

Posterior posterior_from_parts(const MatrixNormalPrior& prior, const Matrix& z,
                               const Matrix& x_plus_clamped, const Vector& weights) {
  const int nx = prior.nx();
  const int p = nx + prior.nu();
  COED_REQUIRE(z.rows() == p, "posterior: Z must have n_x + n_u rows");
  COED_REQUIRE(x_plus_clamped.rows() == nx && x_plus_clamped.cols() == z.cols() &&
                   weights.size() == z.cols(),
               "posterior: regression block columns must agree");

  const Matrix zs = z * weights.asDiagonal();
  Matrix lambda_n = prior.col_precision + zs * z.transpose();
  lambda_n = 0.5 * (lambda_n + lambda_n.transpose());

  const Eigen::LLT<Matrix> llt = spd_factor(lambda_n, "posterior");

  const Matrix rhs = prior.mean * prior.col_precision + x_plus_clamped * zs.transpose();
  Posterior post;
  post.mean = llt.solve(rhs.transpose()).transpose();
  post.col_precision = lambda_n;
  post.noise_cov = prior.noise_cov;
  return post;
}

Posterior posterior(const MatrixNormalPrior& prior, const Dataset& data, double alpha1,
                    double alpha2) {
  const int nx = prior.nx();
  const int nu = prior.nu();
  const int m = data.size();
  COED_REQUIRE(data.x.rows() == nx && data.x_plus.rows() == nx,
               "posterior: dataset state dimension does not match prior");
  COED_REQUIRE(data.u.rows() == nu, "posterior: dataset input dimension does not match prior");
  COED_REQUIRE(data.x_plus.cols() == m && data.u.cols() == m,
               "posterior: dataset columns must agree");

  const Matrix x = clamp_states(data.x);
  Matrix z(nx + nu, m);
  z.topRows(nx) = x;
  z.bottomRows(nu) = data.u;
  return posterior_from_parts(prior, z, clamp_states(data.x_plus), weight_vector(x, alpha1, alpha2));
}

}  // namespace coed
