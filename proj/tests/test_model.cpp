#include <doctest.h>

#include "coed/model.hpp"
#include "oracles.hpp"

using namespace coed;

TEST_SUITE("model") {

TEST_CASE("car string: three-car benchmark entries") {
  const SystemParams sys = car_string_system(3, {1, 1, 1}, {1, 1, 1}, 0.1);
  CHECK(sys.nx() == 5);
  CHECK(sys.nu() == 3);
  CHECK(sys.A(0, 0) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(sys.A(1, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(sys.A(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sys.A(1, 2) == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(sys.B(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(sys.B(1, 0) == 0.0);
}

TEST_CASE("car string: zero sampling time freezes the dynamics") {
  const SystemParams sys = car_string_system(2, {1, 1}, {1, 1}, 0.0);
  CHECK((sys.A - Matrix::Identity(3, 3)).norm() == 0.0);
  CHECK(sys.B.norm() == 0.0);
}

TEST_CASE("car string: four cars match the per-car difference equations") {
  const int n = 4;
  const std::vector<double> masses{2, 2, 2, 2}, alphas{1, 1, 1, 1};
  const double ts = 0.1;
  const SystemParams sys = car_string_system(n, masses, alphas, ts);
  REQUIRE(sys.A.rows() == 7);
  REQUIRE(sys.B.cols() == 4);

  // Independent oracle: step the per-car equations directly on random states.
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = rng.normal_vector(7);
    const Vector u = rng.normal_vector(4);
    Vector next(7);
    for (int k = 0; k < n; ++k) {
      const double v = x(2 * k);
      next(2 * k) = (1.0 - alphas[k] * ts / masses[k]) * v + ts / masses[k] * u(k);
      if (k + 1 < n) next(2 * k + 1) = ts * (v - x(2 * (k + 1))) + x(2 * k + 1);
    }
    CHECK((sys.A * x + sys.B * u - next).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("car string: dimensions scale as (2n-1) x n") {
  for (int n = 2; n <= 6; ++n) {
    const std::vector<double> ones(n, 1.0);
    const SystemParams sys = car_string_system(n, ones, ones, 0.05);
    CHECK(sys.A.rows() == 2 * n - 1);
    CHECK(sys.A.cols() == 2 * n - 1);
    CHECK(sys.B.rows() == 2 * n - 1);
    CHECK(sys.B.cols() == n);
  }
}

TEST_CASE("car string: rejects bad arguments") {
  const std::vector<double> ones3(3, 1.0);
  CHECK_THROWS_AS(car_string_system(3, {1, 1}, ones3, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(car_string_system(3, ones3, {1, 1}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(car_string_system(3, ones3, ones3, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(car_string_system(1, {1.0}, {1.0}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(car_string_system(3, {1, -1, 1}, ones3, 0.1), std::invalid_argument);
}

TEST_CASE("vectorize stacks columns") {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  const Vector v = vectorize(m);
  CHECK(v(0) == 1);
  CHECK(v(1) == 3);
  CHECK(v(2) == 2);
  CHECK(v(3) == 4);

  CHECK(vectorize(Matrix::Zero(3, 4)).norm() == 0.0);
}

TEST_CASE("vectorize/devectorize round-trip is exact") {
  Rng rng(7);
  const Matrix m = rng.normal_matrix(5, 8);
  const Matrix back = devectorize(vectorize(m), 5, 8);
  CHECK((m - back).norm() == 0.0);

  for (int trial = 0; trial < 20; ++trial) {
    const int r = 1 + static_cast<int>(rng.uniform(0, 6));
    const int c = 1 + static_cast<int>(rng.uniform(0, 6));
    const Matrix a = rng.normal_matrix(r, c);
    CHECK((devectorize(vectorize(a), r, c) - a).norm() == 0.0);
  }
}

TEST_CASE("devectorize rejects length mismatch") {
  CHECK_THROWS_AS(devectorize(Vector::Zero(5), 2, 3), std::invalid_argument);
}

}  // TEST_SUITE
