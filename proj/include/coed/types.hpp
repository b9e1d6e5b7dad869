#pragma once

#include <vector>

#include "coed/common.hpp"

namespace coed {

/// Discrete-time linear system x_{t+1} = A x_t + B u_t + w_t.
struct SystemParams {
  Matrix A;  // n_x x n_x
  Matrix B;  // n_x x n_u

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
};

/// Gaussian prior on Theta = [A, B] with Kronecker-factored covariance:
/// Cov[Theta_ij, Theta_kl] = noise_cov(k,i) * inv(col_precision)(j,l).
struct MatrixNormalPrior {
  Matrix mean;           // Theta_0: n_x x (n_x + n_u)
  Matrix col_precision;  // Lambda_0: (n_x + n_u) x (n_x + n_u), symmetric PD
  Matrix noise_cov;      // Sigma_w: n_x x n_x, symmetric PD

  int nx() const { return static_cast<int>(mean.rows()); }
  int nu() const { return static_cast<int>(mean.cols() - mean.rows()); }
};

/// Candidate experiment input sequence with its energy budget.
struct ExperimentPlan {
  Matrix U;     // n_u x T, columns u_0..u_{T-1}
  double beta;  // Frobenius radius of the admissible set
};

/// Aligned transition triples (x_i^+, x_i, u_i), one per column.
struct Dataset {
  Matrix x_plus;  // n_x x M
  Matrix x;       // n_x x M
  Matrix u;       // n_u x M

  int size() const { return static_cast<int>(x.cols()); }
};

/// Finite-horizon quadratic cost and its process-noise model.
struct LqrSpec {
  Matrix Q;        // n_x x n_x, symmetric PSD, per-stage state cost
  Matrix Q_N;      // n_x x n_x, symmetric PSD, terminal cost
  Matrix R;        // n_u x n_u, symmetric PD, input cost
  int N = 0;       // control horizon (>= 1)
  Vector x0;       // initial state
  Matrix sigma_w;  // process-noise covariance during control

  int nx() const { return static_cast<int>(Q.rows()); }
  int nu() const { return static_cast<int>(R.rows()); }
};

/// Process-noise realization for one experiment: columns w_0..w_{T-1}.
struct NoiseBlock {
  Matrix W;  // n_x x T

  int horizon() const { return static_cast<int>(W.cols()); }
};

/// Simulated experiment trajectory: columns x_0..x_{T-1} plus the terminal
/// state x_T, so a T-step run yields T transition pairs.
struct StateTrajectory {
  Matrix X;    // n_x x T
  Vector x_T;  // terminal state

  int horizon() const { return static_cast<int>(X.cols()); }
};

/// Posterior law of Theta after conditioning on a dataset.
struct Posterior {
  Matrix mean;           // Theta_hat: n_x x (n_x + n_u)
  Matrix col_precision;  // Lambda_n
  Matrix noise_cov;      // Sigma_w (carried through from the prior)

  int nx() const { return static_cast<int>(mean.rows()); }
  int nu() const { return static_cast<int>(mean.cols() - mean.rows()); }
};

/// Time-varying linear feedback u_t = K_t x_t with the Riccati value matrices
/// P_0..P_N that produced it.
struct PolicyGains {
  std::vector<Matrix> gains;   // K_0..K_{N-1}, each n_u x n_x
  std::vector<Matrix> values;  // P_0..P_N, each n_x x n_x

  int horizon() const { return static_cast<int>(gains.size()); }
};

/// Everything that defines one experiment-design instance: the prior over the
/// unknown system, the control objective the data will be used for, and the
/// estimator's trajectory-weight parameters.
struct DesignProblem {
  MatrixNormalPrior prior;
  LqrSpec lqr;
  double alpha1 = 1e3;  // weight-function center (state-norm scale)
  double alpha2 = 1e6;  // weight-function sharpness

  int nx() const { return prior.nx(); }
  int nu() const { return prior.nu(); }
};

/// Theta = [A, B] as a single n_x x (n_x + n_u) block.
inline Matrix theta_matrix(const SystemParams& sys) {
  Matrix theta(sys.nx(), sys.nx() + sys.nu());
  theta.leftCols(sys.nx()) = sys.A;
  theta.rightCols(sys.nu()) = sys.B;
  return theta;
}

/// Inverse of theta_matrix.
inline SystemParams split_theta(const Matrix& theta, int nx) {
  COED_REQUIRE(theta.rows() == nx && theta.cols() > nx,
               "split_theta: Theta must be n_x x (n_x + n_u)");
  return SystemParams{theta.leftCols(nx), theta.rightCols(theta.cols() - nx)};
}

}  // namespace coed
