#pragma once

#include <cstdint>
#include <random>

namespace rppg {

/// Seedable generator. Draws are built from raw engine bits only, so a given
/// seed yields the same sequence on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  std::size_t uniform_index(std::size_t n);  // [0, n)
  long uniform_int(long lo, long hi);      // [lo, hi]
  double normal();                         // N(0, 1), Box-Muller

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Per-item seed derived from a run seed, e.g. derive_seed(run_seed, epoch, clip_index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace rppg
