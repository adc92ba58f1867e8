#pragma once

// Counter-based random streams. Every draw is a pure function of
// (key, counter), so trials can run in any order, in parallel, and still
// reproduce bit-identical sequences. Keys are derived by chaining a mixing
// finalizer over (seed, stream id, purpose).

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dpe {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class StreamPurpose : std::uint64_t {
  Noise = 1,
  Theta = 2,
  InitialEstimates = 3,
  Placement = 4,
  Walk = 5,
  Test = 6,
};

inline std::uint64_t derive_key(std::uint64_t seed, StreamPurpose purpose, std::uint64_t id = 0) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ static_cast<std::uint64_t>(purpose));
  k = mix64(k ^ id);
  return k;
}

inline std::uint64_t bits_at(std::uint64_t key, std::uint64_t counter) {
  return mix64(key ^ (counter * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
}

// Uniform in [0, 1): top 53 bits of the mixed counter word.
inline double uniform_at(std::uint64_t key, std::uint64_t counter) {
  return static_cast<double>(bits_at(key, counter) >> 11) * 0x1.0p-53;
}

// Uniform in (0, 1]: never returns 0, safe under log().
inline double uniform_open_at(std::uint64_t key, std::uint64_t counter) {
  return (static_cast<double>(bits_at(key, counter) >> 11) + 1.0) * 0x1.0p-53;
}

inline std::uint64_t uniform_index_at(std::uint64_t key, std::uint64_t counter, std::uint64_t bound) {
  return bits_at(key, counter) % bound;  // bounds here are tiny; modulo bias is negligible
}

// Standard normal via Box-Muller on two counter slots per draw.
inline double gaussian_at(std::uint64_t key, std::uint64_t counter) {
  const double u1 = uniform_open_at(key, 2 * counter);
  const double u2 = uniform_at(key, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// A keyed stream of N(0,1) samples indexed by time step.
struct GaussianStream {
  std::uint64_t key = 0;
  double at(std::uint64_t k) const { return gaussian_at(key, k); }
};

// A keyed stream with a running counter, for one-shot sampling chores
// (placements, initial estimates) where indexing by time is not natural.
struct CounterStream {
  std::uint64_t key = 0;
  std::uint64_t ctr = 0;
  double next_uniform() { return uniform_at(key, ctr++); }
  double next_gaussian() {
    const double u1 = uniform_open_at(key, ctr++);
    const double u2 = uniform_at(key, ctr++);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::uint64_t next_index(std::uint64_t bound) { return uniform_index_at(key, ctr++, bound); }
};

}  // namespace dpe
