#pragma once

#include <cstdint>
#include <span>

#include "maskx/error.hpp"

namespace maskx {

// splitmix64 finalizer; bijective on 64-bit words.
inline constexpr std::uint64_t mix_bits(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Counter-based generator: every output is a pure function of (seed, counter),
// so streams replay identically on any platform and can be split without
// shared state. The n-th output equals mix_bits(seed + (n+1)*GAMMA), i.e. a
// splitmix64 stream with random-access indexing.
class Rng {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t at(std::uint64_t counter) const noexcept {
    return mix_bits(seed_ + (counter + 1) * kGamma);
  }

  std::uint64_t next_u64() noexcept { return at(counter_++); }

  // Uniform in [0,1) with 53 random bits.
  static double to_unit(std::uint64_t x) noexcept { return double(x >> 11) * 0x1.0p-53; }
  double next_double() noexcept { return to_unit(next_u64()); }

  // Uniform in [lo, hi); lo == hi returns lo exactly.
  double uniform(double lo, double hi) {
    require(lo <= hi, Errc::invalid_argument, "rng_uniform: lo > hi");
    if (lo == hi) return lo;
    return lo + (hi - lo) * next_double();
  }

  void fill_uniform(double lo, double hi, std::span<double> out) {
    require(lo <= hi, Errc::invalid_argument, "rng_uniform: lo > hi");
    for (double& v : out) v = (lo == hi) ? lo : lo + (hi - lo) * next_double();
  }

  std::uint64_t next_below(std::uint64_t n) noexcept {  // modulo bias negligible for small n
    return n ? next_u64() % n : 0;
  }

  // Independent derived stream; fork(k) is stable under interleaving with other draws.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix_bits(seed ^ mix_bits(stream + 0x6a09e667f3bcc909ULL));
  }
  Rng fork(std::uint64_t stream) const noexcept { return Rng(derive_seed(seed_, stream)); }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace maskx
