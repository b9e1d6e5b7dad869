#include "coed/sim.hpp"

#include <cmath>

namespace coed {

namespace {

void require_symmetric(const Matrix& s, const char* what) {
  COED_REQUIRE(s.rows() == s.cols(), std::string(what) + ": not square");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  COED_REQUIRE((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
               std::string(what) + ": not symmetric");
}

}  // namespace

Matrix psd_sqrt(const Matrix& s) {
  require_symmetric(s, "psd_sqrt");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  COED_CHECK(eig.info() == Eigen::Success, "psd_sqrt: eigendecomposition failed");
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  Vector roots = eig.eigenvalues();
  for (int i = 0; i < roots.size(); ++i) {
    COED_REQUIRE(roots(i) >= -1e-10 * scale, "psd_sqrt: matrix is not positive semidefinite");
    roots(i) = std::sqrt(std::max(0.0, roots(i)));
  }
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix spd_inverse_sqrt(const Matrix& s) {
  require_symmetric(s, "spd_inverse_sqrt");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  COED_CHECK(eig.info() == Eigen::Success, "spd_inverse_sqrt: eigendecomposition failed");
  const double max_eig = eig.eigenvalues().maxCoeff();
  Vector roots = eig.eigenvalues();
  for (int i = 0; i < roots.size(); ++i) {
    COED_REQUIRE(roots(i) > 1e-14 * std::max(1.0, max_eig),
                 "spd_inverse_sqrt: matrix is not positive definite");
    roots(i) = 1.0 / std::sqrt(roots(i));
  }
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

ExperimentSampler::ExperimentSampler(const MatrixNormalPrior& prior)
    : theta0_(prior.mean),
      row_factor_(psd_sqrt(prior.noise_cov)),
      col_factor_(spd_inverse_sqrt(prior.col_precision)) {
  COED_REQUIRE(prior.mean.cols() > prior.mean.rows(),
               "ExperimentSampler: prior mean must be n_x x (n_x + n_u)");
  COED_REQUIRE(prior.col_precision.rows() == prior.mean.cols(),
               "ExperimentSampler: col_precision must match Theta columns");
  COED_REQUIRE(prior.noise_cov.rows() == prior.mean.rows(),
               "ExperimentSampler: noise_cov must match Theta rows");
}

SystemParams ExperimentSampler::sample_theta(Rng& rng) const {
  const Matrix e = rng.normal_matrix(static_cast<int>(theta0_.rows()),
                                     static_cast<int>(theta0_.cols()));
  const Matrix theta = theta0_ + row_factor_ * e * col_factor_.transpose();
  return split_theta(theta, static_cast<int>(theta0_.rows()));
}

NoiseBlock ExperimentSampler::sample_noise(int horizon, Rng& rng) const {
  COED_REQUIRE(horizon >= 1, "sample_noise: horizon must be >= 1");
  const Matrix e = rng.normal_matrix(nx(), horizon);
  return NoiseBlock{row_factor_ * e};
}

SystemParams sample_theta(const MatrixNormalPrior& prior, Rng& rng) {
  return ExperimentSampler(prior).sample_theta(rng);
}

NoiseBlock sample_noise(const Matrix& sigma_w, int horizon, Rng& rng) {
  COED_REQUIRE(horizon >= 1, "sample_noise: horizon must be >= 1");
  const Matrix factor = psd_sqrt(sigma_w);
  const int nx = static_cast<int>(sigma_w.rows());
  Matrix e(nx, horizon);
  for (int j = 0; j < horizon; ++j)
    for (int i = 0; i < nx; ++i) e(i, j) = rng.normal();
  return NoiseBlock{factor * e};
}

StateTrajectory rollout(const SystemParams& theta, const Matrix& u, const NoiseBlock& noise,
                        const Vector& x0) {
  const int nx = theta.nx();
  const int horizon = static_cast<int>(u.cols());
  COED_REQUIRE(theta.A.cols() == nx && theta.B.rows() == nx, "rollout: inconsistent system");
  COED_REQUIRE(u.rows() == theta.B.cols(), "rollout: input rows must equal n_u");
  COED_REQUIRE(noise.W.rows() == nx && noise.W.cols() == horizon,
               "rollout: noise block must be n_x x T");
  COED_REQUIRE(x0.size() == nx, "rollout: x0 must have n_x entries");
  COED_REQUIRE(x0.allFinite() && u.allFinite() && noise.W.allFinite() && theta.A.allFinite() &&
                   theta.B.allFinite(),
               "rollout: non-finite inputs");

  StateTrajectory out;
  out.X.resize(nx, horizon);
  Vector state = x0;
  for (int t = 0; t < horizon; ++t) {
    out.X.col(t) = state;
    state = theta.A * state + theta.B * u.col(t) + noise.W.col(t);
  }
  out.x_T = state;
  return out;
}

Dataset make_dataset(const StateTrajectory& trajectory, const Matrix& u) {
  const int horizon = trajectory.horizon();
  COED_REQUIRE(static_cast<int>(u.cols()) == horizon,
               "make_dataset: input columns must equal trajectory horizon");
  Dataset data;
  data.x = trajectory.X;
  data.u = u;
  data.x_plus.resize(trajectory.X.rows(), horizon);
  if (horizon > 1) data.x_plus.leftCols(horizon - 1) = trajectory.X.rightCols(horizon - 1);
  data.x_plus.col(horizon - 1) = trajectory.x_T;
  return data;
}

}  // namespace coed
