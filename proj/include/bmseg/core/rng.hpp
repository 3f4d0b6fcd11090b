#pragma once

#include <cstdint>
#include <random>

namespace bmseg {

// splitmix64; used to derive independent child seeds from a master seed so
// sampling streams are recomputable (resume lands on the same draws).
inline uint64_t mix_seed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t step = 0) {
  return mix_seed(mix_seed(master ^ (stream * 0xd1342543de82ef95ULL)) + step);
}

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t master, uint64_t stream, uint64_t step = 0) {
  return Rng(derive_seed(master, stream, step));
}

inline int rand_int(Rng& rng, int lo, int hi) {  // inclusive range
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double rand_uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double rand_normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  return std::normal_distribution<double>(mean, stddev)(rng);
}

}  // namespace bmseg
