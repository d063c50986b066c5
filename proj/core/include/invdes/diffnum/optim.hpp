#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "invdes/diffnum/tensor.hpp"

namespace invdes::diffnum {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments for one parameter list; step counts completed updates.
struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t step = 0;
};

/// One bias-corrected Adam update: p -= lr * m_hat / (sqrt(v_hat) + eps).
/// Tensors without a gradient are treated as having a zero gradient.
void adam_step(const std::vector<Tensor>& params, AdamState& state);

/// Rescales the gradients of `params` so their joint L2 norm is at most
/// `max_norm`; returns the norm before rescaling.
double clip_grad_norm(const std::vector<Tensor>& params, double max_norm);

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config = {});
  void step() { adam_step(params_, state_); }
  void zero_grad();
  [[nodiscard]] double lr() const { return state_.config.lr; }
  void set_lr(double lr) { state_.config.lr = lr; }
  [[nodiscard]] const AdamState& state() const { return state_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

/// Multiplies the learning rate by `factor` once `patience` consecutive
/// steps fail to beat the best metric by a relative `threshold`.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(double lr, double factor = 0.5, std::size_t patience = 5, double min_lr = 1e-8,
                            double threshold = 1e-4);

  /// Feeds one observation; returns the (possibly reduced) learning rate.
  double step(double metric);
  [[nodiscard]] double lr() const { return lr_; }
  [[nodiscard]] double best() const { return best_; }
  [[nodiscard]] std::size_t wait() const { return wait_; }

 private:
  double lr_;
  double factor_;
  std::size_t patience_;
  double min_lr_;
  double threshold_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t wait_ = 0;
};

}  // namespace invdes::diffnum
