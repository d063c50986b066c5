#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "invdes/diffnum/tensor.hpp"

namespace invdes::diffnum {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// y = x W + b with W of shape {in, out}.
class Linear {
 public:
  Linear() = default;
  /// Xavier-uniform weight multiplied by `gain`, zero bias.
  Linear(std::size_t in, std::size_t out, std::uint64_t seed, double gain = 1.0);

  [[nodiscard]] Tensor forward(const Tensor& x) const;
  [[nodiscard]] std::size_t in_features() const { return weight_.rows(); }
  [[nodiscard]] std::size_t out_features() const { return weight_.cols(); }
  [[nodiscard]] const Tensor& weight() const { return weight_; }
  [[nodiscard]] const Tensor& bias() const { return bias_; }
  void append_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const;

 private:
  Tensor weight_;
  Tensor bias_;
};

/// Affine layers with relu between them and none after the last.
class Mlp {
 public:
  Mlp() = default;
  /// dims = {in, hidden..., out}; layer i is seeded from derive_seed(seed, i).
  /// `out_gain` scales the initial weights of the last layer only.
  Mlp(const std::vector<std::size_t>& dims, std::uint64_t seed, double out_gain = 1.0);

  [[nodiscard]] Tensor forward(const Tensor& x) const;
  [[nodiscard]] std::size_t in_features() const { return layers_.front().in_features(); }
  [[nodiscard]] std::size_t out_features() const { return layers_.back().out_features(); }
  [[nodiscard]] const std::vector<Linear>& layers() const { return layers_; }
  /// Names are prefix + ".<layer>.weight" / ".<layer>.bias".
  void append_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const;
  [[nodiscard]] std::vector<Tensor> parameters() const;

 private:
  std::vector<Linear> layers_;
};

/// Toggles gradient tracking on every tensor in the list.
void set_requires_grad(const std::vector<NamedTensor>& params, bool on);
void zero_grad(const std::vector<NamedTensor>& params);

}  // namespace invdes::diffnum
