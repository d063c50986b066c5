#include "invdes/diffnum/optim.hpp"

#include <algorithm>
#include <cmath>

namespace invdes::diffnum {

void adam_step(const std::vector<Tensor>& params, AdamState& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("Adam state does not match parameter list");
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k];
    if (!p.has_grad()) {
      // Zero gradient still decays the moments.
      for (std::size_t i = 0; i < p.numel(); ++i) {
        state.m[k][i] *= c.beta1;
        state.v[k][i] *= c.beta2;
      }
    }
    const std::vector<double>& g = p.node()->grad;
    auto& w = p.mutable_data();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != w.size()) throw ShapeError("Adam moment size mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!g.empty()) {
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      }
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      w[i] -= c.lr * mh / (std::sqrt(vh) + c.eps);
    }
  }
}

double clip_grad_norm(const std::vector<Tensor>& params, double max_norm) {
  if (!(max_norm > 0.0)) throw Error("clip_grad_norm: max_norm must be positive");
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.node()->grad) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto& p : params) {
      for (double& g : p.node()->grad) g *= s;
    }
  }
  return norm;
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config) : params_(std::move(params)) { state_.config = config; }

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

PlateauScheduler::PlateauScheduler(double lr, double factor, std::size_t patience, double min_lr, double threshold)
    : lr_(lr), factor_(factor), patience_(patience), min_lr_(min_lr), threshold_(threshold) {
  if (!(factor > 0.0 && factor < 1.0)) throw Error("scheduler factor must lie in (0, 1)");
  if (patience == 0) throw Error("scheduler patience must be positive");
}

double PlateauScheduler::step(double metric) {
  if (metric < best_ * (1.0 - threshold_) || best_ == std::numeric_limits<double>::infinity()) {
    best_ = metric;
    wait_ = 0;
    return lr_;
  }
  if (++wait_ >= patience_) {
    lr_ = std::max(lr_ * factor_, min_lr_);
    wait_ = 0;
  }
  return lr_;
}

}  // namespace invdes::diffnum
