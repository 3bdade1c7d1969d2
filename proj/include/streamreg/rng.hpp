#pragma once

#include <cstdint>

namespace streamreg {

// SplitMix64 generator (Steele, Lea & Flood's mixing constants).  Chosen for
// reproducibility: the full state is one 64-bit word, so seeding, substream
// derivation and the exact draw sequence are easy to document and to port.
//
// Substream b of seed s starts from state mix64(mix64(s + GOLDEN) + b),
// which decorrelates replicate streams from each other and from the root.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static SplitMix64 substream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next();

  // Uniform on [0, 1) with 53 random bits: (x >> 11) * 2^-53.
  double next_unit();

  // floor(u * n) for u = next_unit(); uniform over {0, ..., n-1}.
  std::uint64_t next_below(std::uint64_t n);

  // Standard normal via Box-Muller (uses two uniforms per pair).
  double next_normal();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace streamreg
