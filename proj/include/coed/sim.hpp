#pragma once

#include "coed/rng.hpp"
#include "coed/types.hpp"

namespace coed {

/// Symmetric PSD square root via eigendecomposition. Eigenvalues in
/// [-1e-10 * scale, 0) are floored to zero; anything more negative is rejected.
Matrix psd_sqrt(const Matrix& s);

/// Symmetric factor C with C * C^T = inv(s) for symmetric PD s.
Matrix spd_inverse_sqrt(const Matrix& s);

/// Caches the prior/noise factorizations so hot loops can draw many samples
/// without refactorizing. Draw order per sample is fixed: first the parameter
/// block (n_x x (n_x+n_u) normals, column-major), then noise columns.
class ExperimentSampler {
 public:
  explicit ExperimentSampler(const MatrixNormalPrior& prior);

  SystemParams sample_theta(Rng& rng) const;
  NoiseBlock sample_noise(int horizon, Rng& rng) const;

  int nx() const { return static_cast<int>(theta0_.rows()); }

 private:
  Matrix theta0_;
  Matrix row_factor_;  // row_factor * row_factor^T = Sigma_w
  Matrix col_factor_;  // col_factor * col_factor^T = inv(Lambda_0)
};

/// One draw Theta ~ prior: Theta_0 + C_r E C_c^T with E i.i.d. standard normal.
SystemParams sample_theta(const MatrixNormalPrior& prior, Rng& rng);

/// T i.i.d. columns w_t ~ N(0, sigma_w).
NoiseBlock sample_noise(const Matrix& sigma_w, int horizon, Rng& rng);

/// Simulates x_{t+1} = A x_t + B u_t + w_t for t = 0..T-1 and returns
/// x_0..x_{T-1} plus the terminal state x_T.
StateTrajectory rollout(const SystemParams& theta, const Matrix& u, const NoiseBlock& noise,
                        const Vector& x0);

/// Transition triples (x_{t+1}, x_t, u_t) for t = 0..T-1, so M = T.
Dataset make_dataset(const StateTrajectory& trajectory, const Matrix& u);

}  // namespace coed
