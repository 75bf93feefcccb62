#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace qem {

// All randomness in the project flows through these helpers. std::uniform_*
// distributions are implementation-defined, so we draw raw 64-bit words from
// mt19937_64 and map them ourselves — results are bit-identical across
// standard libraries, which the determinism guarantees depend on.

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent, order-invariant stream for (seed, stream_id) pairs, e.g. one
// per circuit in a dataset build so workers can process circuits in any order.
inline std::mt19937_64 derive_stream(uint64_t seed, uint64_t stream_id) {
  uint64_t s = seed;
  uint64_t a = splitmix64(s);
  s ^= stream_id * 0xd6e8feb86659fd93ULL + 0x2545f4914f6cdd1dULL;
  uint64_t b = splitmix64(s);
  return std::mt19937_64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Uniform double in [0, 1) using the top 53 bits.
inline double uniform_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_double(rng);
}

// Unbiased integer in [lo, hi] via rejection sampling.
inline int64_t uniform_int(std::mt19937_64& rng, int64_t lo, int64_t hi) {
  uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<int64_t>(rng());  // full 64-bit range
  uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return lo + static_cast<int64_t>(draw % span);
}

template <typename T>
void shuffle_inplace(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_int(rng, 0, static_cast<int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace qem
