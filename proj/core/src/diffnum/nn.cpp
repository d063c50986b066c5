#include "invdes/diffnum/nn.hpp"

#include "invdes/diffnum/init.hpp"
#include "invdes/diffnum/ops.hpp"

namespace invdes::diffnum {

Linear::Linear(std::size_t in, std::size_t out, std::uint64_t seed, double gain)
    : weight_(xavier_uniform({in, out}, seed)), bias_(Tensor::zeros({out})) {
  if (gain != 1.0) {
    for (double& w : weight_.mutable_data()) w *= gain;
  }
}

Tensor Linear::forward(const Tensor& x) const { return add(matmul(x, weight_), bias_); }

void Linear::append_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

Mlp::Mlp(const std::vector<std::size_t>& dims, std::uint64_t seed, double out_gain) {
  if (dims.size() < 2) throw ShapeError("Mlp needs at least input and output sizes");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    layers_.emplace_back(dims[i], dims[i + 1], derive_seed(seed, i), i + 2 == dims.size() ? out_gain : 1.0);
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    if (i + 1 < layers_.size()) h = relu(h);
  }
  return h;
}

void Mlp::append_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].append_parameters(prefix + "." + std::to_string(i), out);
}

std::vector<Tensor> Mlp::parameters() const {
  std::vector<NamedTensor> named;
  append_parameters("", named);
  std::vector<Tensor> out;
  for (auto& n : named) out.push_back(n.tensor);
  return out;
}

void set_requires_grad(const std::vector<NamedTensor>& params, bool on) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.set_requires_grad(on);
  }
}

void zero_grad(const std::vector<NamedTensor>& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

}  // namespace invdes::diffnum
