#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "invdes/error.hpp"

namespace invdes::diffnum {

/// Dimensions; {} is a scalar, {n} a vector, {r, c} a row-major matrix.
using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// One value on the tape. Inputs are only retained when a gradient can flow.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  ///< empty until a gradient arrives
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  /// Gradient buffer, allocated (zeroed) on first use.
  std::vector<double>& grad_buffer();
};

/// Handle to a tape node. Copies share storage.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> data, bool requires_grad = false);

  [[nodiscard]] const Shape& shape() const { return node_->shape; }
  [[nodiscard]] std::size_t numel() const { return node_->value.size(); }
  [[nodiscard]] std::size_t dim() const { return node_->shape.size(); }
  [[nodiscard]] std::size_t rows() const;
  [[nodiscard]] std::size_t cols() const;

  [[nodiscard]] const std::vector<double>& data() const { return node_->value; }
  /// Direct write access for optimizers and loaders; bypasses the tape.
  [[nodiscard]] std::vector<double>& mutable_data() { return node_->value; }
  [[nodiscard]] double item() const;
  [[nodiscard]] double operator[](std::size_t i) const { return node_->value[i]; }

  [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  [[nodiscard]] bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient after backward(); zeros when nothing reached this tensor.
  [[nodiscard]] std::vector<double> grad() const;
  void zero_grad() { node_->grad.clear(); }

  /// Same values, no history.
  [[nodiscard]] Tensor detach() const;
  /// Deep copy of values into a fresh leaf.
  [[nodiscard]] Tensor clone() const;

  /// Reverse-mode sweep from this scalar. Leaf gradients accumulate.
  void backward() const;

  [[nodiscard]] Node* node() const { return node_.get(); }
  [[nodiscard]] const std::shared_ptr<Node>& node_ptr() const { return node_; }
  static Tensor from_node(std::shared_ptr<Node> node);

 private:
  std::shared_ptr<Node> node_;
};

/// Builds a result node. When no input requires a gradient the inputs and
/// backward function are dropped.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn);

}  // namespace invdes::diffnum
