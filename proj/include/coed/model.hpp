#pragma once

#include <vector>

#include "coed/types.hpp"

namespace coed {

/// Discrete-time car-string system: n_cars vehicles tracking a reference
/// velocity and inter-car gaps. State ordering is
/// [dv_1, dw_1, dv_2, dw_2, ..., dv_n] (velocity deviation of car k, gap
/// deviation between cars k and k+1), giving n_x = 2*n_cars - 1 and one force
/// input per car. Sampling time ts may be zero (frozen dynamics) but not
/// negative.
SystemParams car_string_system(int n_cars, const std::vector<double>& masses,
                               const std::vector<double>& alphas, double ts);

/// Column-stacking of a matrix into a vector.
Vector vectorize(const Matrix& m);

/// Inverse of vectorize for a rows x cols matrix.
Matrix devectorize(const Vector& v, int rows, int cols);

}  // namespace coed
