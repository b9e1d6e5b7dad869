#pragma once

#include <cstdint>
#include <random>

#include "coed/common.hpp"

namespace coed {

/// SplitMix64 finalizer; used to derive well-mixed seeds from (key, index) pairs.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic combination of a base seed with a stream index.
std::uint64_t mix_seed(std::uint64_t key, std::uint64_t index);

/// Seedable RNG with explicit substream derivation.
///
/// Substreams are keyed by (seed, index) rather than by generator state, so a
/// batch of samples produces identical draws regardless of evaluation order or
/// worker count. Normal variates use Box-Muller on top of mt19937_64 so the
/// byte-level output is owned by this code, not the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent child stream; unaffected by draws made on this object.
  Rng substream(std::uint64_t index) const { return Rng(mix_seed(key_, index)); }

  std::uint64_t key() const { return key_; }

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal.
  double normal();

  /// Matrix of i.i.d. standard normals, filled column by column.
  Matrix normal_matrix(int rows, int cols);
  Vector normal_vector(int n);

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace coed
