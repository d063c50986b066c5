#include "invdes/diffnum/init.hpp"

#include <cmath>

namespace invdes::diffnum {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error("Rng::below(0)");
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Tensor xavier_uniform(const Shape& shape, std::uint64_t seed) {
  if (shape.size() != 2) throw ShapeError("xavier_uniform needs a 2-D shape, got " + to_string(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
  Rng rng(seed);
  std::vector<double> data(numel(shape));
  for (auto& x : data) x = rng.uniform(-bound, bound);
  return {shape, std::move(data)};
}

}  // namespace invdes::diffnum
