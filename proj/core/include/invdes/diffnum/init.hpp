#pragma once

#include <cstdint>
#include <random>

#include "invdes/diffnum/tensor.hpp"

namespace invdes::diffnum {

/// Seeded generator shared by initializers, samplers and shufflers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits; identical across standard libraries.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Decorrelated child seed (splitmix64 of base and stream).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Entries i.i.d. uniform on ±sqrt(6 / (fan_in + fan_out)); shape must be 2-D.
Tensor xavier_uniform(const Shape& shape, std::uint64_t seed);

}  // namespace invdes::diffnum
