// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#pragma once

#include <cstdint>

namespace isacma {

/// Stable 64-bit key for (master_seed, index) built from a 128-bit mix.
/// Used to derive per-trial streams that do not depend on execution order.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

/// SplitMix64 stream with a Box-Muller normal sampler. Implemented here rather
/// than through <random> distributions so draws are identical across standard
/// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace isacma
