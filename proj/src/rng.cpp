#include "coed/rng.hpp"

#include <cmath>
#include <numbers>

namespace coed {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t key, std::uint64_t index) {
  return splitmix64(splitmix64(key) ^ (splitmix64(index) + 0x9E3779B97F4A7C15ull));
}

Rng::Rng(std::uint64_t seed) : key_(seed), engine_(splitmix64(seed ^ 0xA02BDBF7BB3C0A7ull)) {}

double Rng::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Matrix Rng::normal_matrix(int rows, int cols) {
  COED_REQUIRE(rows >= 0 && cols >= 0, "normal_matrix: negative dimensions");
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

Vector Rng::normal_vector(int n) {
  COED_REQUIRE(n >= 0, "normal_vector: negative length");
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = normal();
  return v;
}

}  // namespace coed
