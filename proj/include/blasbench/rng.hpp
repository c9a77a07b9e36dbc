#pragma once

#include <cstdint>

namespace blasbench {

// splitmix64 (Steele, Lea & Flood 2014). This is the generator behind the
// bootstrap: the resample index draws are part of the results contract, so
// the generator and the substream derivation below are fixed, not an
// implementation detail.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform draw in [0, n). Plain modulo; the bias at n << 2^64 is far below
  // anything observable and keeps the scheme trivial to re-implement.
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }
};

// Substream for bootstrap resample b (1-based): the generator state is the
// run seed XORed with b times the 64-bit golden ratio. Substreams are
// self-contained, so resamples can be evaluated on any number of workers
// with bit-identical output.
inline SplitMix64 bootstrap_substream(std::int64_t seed, std::uint64_t resample_index) {
  return SplitMix64(static_cast<std::uint64_t>(seed) ^
                    (resample_index * 0x9E3779B97F4A7C15ULL));
}

}  // namespace blasbench
