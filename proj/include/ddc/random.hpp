#pragma once

#include <cstdint>
#include <random>

namespace ddc {

/// Mersenne-Twister stream with a portable uniform mapping (the standard
/// distributions are implementation-defined, which would break byte-identical
/// reruns across toolchains).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double canonical() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * canonical(); }

 private:
  std::mt19937_64 engine_;
};

/// Independent seed for (master, run, stream) via splitmix64 mixing.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t stream);

}  // namespace ddc
