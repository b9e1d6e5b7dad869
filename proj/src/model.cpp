#include "coed/model.hpp"

#include <cmath>

namespace coed {

SystemParams car_string_system(int n_cars, const std::vector<double>& masses,
                               const std::vector<double>& alphas, double ts) {
  COED_REQUIRE(n_cars >= 2, "car_string_system: need at least two cars");
  COED_REQUIRE(static_cast<int>(masses.size()) == n_cars,
               "car_string_system: masses length must equal n_cars");
  COED_REQUIRE(static_cast<int>(alphas.size()) == n_cars,
               "car_string_system: alphas length must equal n_cars");
  COED_REQUIRE(std::isfinite(ts) && ts >= 0.0, "car_string_system: ts must be non-negative");
  for (int k = 0; k < n_cars; ++k) {
    COED_REQUIRE(masses[k] > 0.0 && std::isfinite(masses[k]),
                 "car_string_system: masses must be positive");
    COED_REQUIRE(alphas[k] > 0.0 && std::isfinite(alphas[k]),
                 "car_string_system: alphas must be positive");
  }

  const int nx = 2 * n_cars - 1;
  Matrix A = Matrix::Zero(nx, nx);
  Matrix B = Matrix::Zero(nx, n_cars);

  // Velocity rows: dv_k(t+1) = (1 - alpha_k ts / m_k) dv_k + (ts / m_k) du_k.
  // Gap rows:      dw_k(t+1) = ts (dv_k - dv_{k+1}) + dw_k.
  for (int k = 0; k < n_cars; ++k) {
    const int v_row = 2 * k;
    A(v_row, v_row) = 1.0 - alphas[k] * ts / masses[k];
    B(v_row, k) = ts / masses[k];
  }
  for (int k = 0; k + 1 < n_cars; ++k) {
    const int w_row = 2 * k + 1;
    A(w_row, 2 * k) = ts;
    A(w_row, w_row) = 1.0;
    A(w_row, 2 * (k + 1)) = -ts;
  }
  return SystemParams{std::move(A), std::move(B)};
}

Vector vectorize(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix devectorize(const Vector& v, int rows, int cols) {
  COED_REQUIRE(static_cast<int>(v.size()) == rows * cols,
               "devectorize: length does not match rows * cols");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace coed
