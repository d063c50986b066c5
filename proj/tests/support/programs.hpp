#pragma once

#include <cstdint>
#include <vector>

#include "invdes/diffnum/tensor.hpp"

namespace invdes::testing {

/// A randomly composed differentiable program over two leaves: an input
/// matrix x and a weight matrix w. Drawn once, then evaluated many times.
class RandomProgram {
 public:
  explicit RandomProgram(std::uint64_t seed);

  /// Scalar output. `kink` receives the smallest |input| seen by relu/abs.
  [[nodiscard]] diffnum::Tensor evaluate(const diffnum::Tensor& x, const diffnum::Tensor& w, double* kink) const;

  [[nodiscard]] const std::vector<double>& x0() const { return x0_; }
  [[nodiscard]] const std::vector<double>& w0() const { return w0_; }
  [[nodiscard]] diffnum::Shape x_shape() const { return {rows_, cols_}; }
  [[nodiscard]] diffnum::Shape w_shape() const { return {cols_, cols_}; }
  [[nodiscard]] const std::vector<int>& ops() const { return ops_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> x0_;
  std::vector<double> w0_;
  std::vector<int> ops_;
  std::vector<std::vector<double>> constants_;
  std::vector<std::vector<std::size_t>> indices_;
  std::vector<double> out_weights_;
};

struct GradCheck {
  double rel_err = 0.0;  ///< ||g - g_fd|| / max(||g||, ||g_fd||)
  double kink = 0.0;     ///< smallest distance to a relu/abs kink
};

/// Reverse-mode gradient of the program w.r.t. both leaves against central
/// differences with step h.
GradCheck check_program(const RandomProgram& program, double h = 1e-6);

/// Vector relative error ||a - b|| / max(||a||, ||b||, floor).
double vector_rel_err(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-12);

}  // namespace invdes::testing
