// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/rng.h"

#include <cmath>

namespace enhgan {

namespace {
constexpr uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

uint64_t splitmix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

uint64_t Rng::next_u64() {
  state_ += kGamma;
  return splitmix(state_);
}

double Rng::uniform() {
  // 53 mantissa bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

uint64_t Rng::uniform_int(uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling to avoid modulo bias.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

double Rng::normal() {
  // Box-Muller; draw until u1 is nonzero so log() is finite.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::normal(double mean, double stddev) { return mean + stddev * normal(); }

uint64_t hash_u64(uint64_t x) { return splitmix(x + kGamma); }

uint64_t hash_combine(uint64_t seed, uint64_t v) {
  return splitmix(seed ^ (v + kGamma + (seed << 6) + (seed >> 2)));
}

uint64_t hash_str(std::string_view s) {
  // FNV-1a
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng derive_rng(uint64_t seed, std::string_view tag) {
  return Rng(hash_combine(seed, hash_str(tag)));
}

Rng derive_rng(uint64_t seed, std::string_view tag, uint64_t i) {
  return Rng(hash_combine(hash_combine(seed, hash_str(tag)), i));
}

Rng derive_rng(uint64_t seed, std::string_view tag, uint64_t i, uint64_t j) {
  return Rng(hash_combine(hash_combine(hash_combine(seed, hash_str(tag)), i), j));
}

}  // namespace enhgan
