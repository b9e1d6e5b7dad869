#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace coed {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {
[[noreturn]] inline void fail_require(const char* file, int line, const std::string& msg) {
  throw std::invalid_argument(std::string(file) + ":" + std::to_string(line) + ": " + msg);
}
[[noreturn]] inline void fail_check(const char* file, int line, const std::string& msg) {
  throw std::runtime_error(std::string(file) + ":" + std::to_string(line) + ": " + msg);
}
}  // namespace detail

}  // namespace coed

// Argument/precondition violations.
#define COED_REQUIRE(cond, msg)                              \
  do {                                                       \
    if (!(cond)) ::coed::detail::fail_require(__FILE__, __LINE__, (msg)); \
  } while (0)

// Numerical failures (factorization breakdown, non-finite results).
#define COED_CHECK(cond, msg)                                \
  do {                                                       \
    if (!(cond)) ::coed::detail::fail_check(__FILE__, __LINE__, (msg)); \
  } while (0)
