// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string_view>

namespace enhgan {

// Deterministic counter-style RNG. All randomness in the project is derived
// from a global seed plus a tag/index path, so any draw can be reproduced
// without serializing generator state (checkpoint resume relies on this).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n);
  // Standard normal via Box-Muller (no state caching, call-pattern stable).
  double normal();
  double normal(double mean, double stddev);

 private:
  uint64_t state_;
};

uint64_t hash_u64(uint64_t x);
uint64_t hash_combine(uint64_t seed, uint64_t v);
uint64_t hash_str(std::string_view s);

// Derive a child generator for (seed, tag, indices...).
Rng derive_rng(uint64_t seed, std::string_view tag);
Rng derive_rng(uint64_t seed, std::string_view tag, uint64_t i);
Rng derive_rng(uint64_t seed, std::string_view tag, uint64_t i, uint64_t j);

}  // namespace enhgan
