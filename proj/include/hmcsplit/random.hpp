#pragma once

#include <cstdint>
#include <random>

namespace hmcsplit {

// SplitMix64 finalizer applied to (master, index); used to derive
// independent per-chain seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// mt19937_64 with hand-rolled variate transforms, so that streams do not
// depend on the standard library's distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal, Marsaglia polar method.
  double normal();

  std::uint64_t bits() { return engine_(); }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hmcsplit
