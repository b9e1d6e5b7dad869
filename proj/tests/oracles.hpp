// Test-only oracles: finite differences, random problem instances, and small
// statistics helpers. Everything here is independent of the gradient and
// estimator implementations it is used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "coed/rng.hpp"
#include "coed/types.hpp"

namespace coed::testing {

// Central finite difference of a scalar function with respect to each matrix
// entry; step is h_rel * max(1, |entry|).
inline Matrix fd_gradient(const std::function<double(const Matrix&)>& f, Matrix m,
                          double h_rel = 1e-6) {
  Matrix g(m.rows(), m.cols());
  for (int j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < m.rows(); ++i) {
      const double orig = m(i, j);
      const double h = h_rel * std::max(1.0, std::abs(orig));
      m(i, j) = orig + h;
      const double fp = f(m);
      m(i, j) = orig - h;
      const double fm = f(m);
      m(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-300, std::abs(a), std::abs(b)});
}

// Max relative error over entries whose magnitude exceeds floor; entries below
// the floor on both sides are ignored.
inline double max_rel_err(const Matrix& a, const Matrix& b, double floor) {
  double worst = 0.0;
  for (int j = 0; j < a.cols(); ++j)
    for (int i = 0; i < a.rows(); ++i) {
      if (std::max(std::abs(a(i, j)), std::abs(b(i, j))) <= floor) continue;
      worst = std::max(worst, rel_err(a(i, j), b(i, j)));
    }
  return worst;
}

inline Matrix random_pd(int n, Rng& rng, double diag_boost = 0.5) {
  const Matrix a = rng.normal_matrix(n, n);
  return a * a.transpose() / n + diag_boost * Matrix::Identity(n, n);
}

inline Matrix random_psd(int n, Rng& rng) {
  const Matrix a = rng.normal_matrix(n, std::max(1, n - 1));
  return a * a.transpose() / n;
}

// Random system with spectral radius scaled below `radius`.
inline SystemParams random_stable_system(int nx, int nu, Rng& rng, double radius = 0.9) {
  Matrix a = rng.normal_matrix(nx, nx);
  const double rho = a.eigenvalues().cwiseAbs().maxCoeff();
  if (rho > 1e-12) a *= radius / rho;
  return SystemParams{a, rng.normal_matrix(nx, nu)};
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace coed::testing
