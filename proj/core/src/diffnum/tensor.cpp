#include "invdes/diffnum/tensor.hpp"

#include <unordered_set>

namespace invdes::diffnum {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

std::vector<double>& Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor::Tensor() : Tensor(Shape{}, {0.0}) {}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) : node_(std::make_shared<Node>()) {
  if (diffnum::numel(shape) != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " + to_string(shape));
  }
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::size_t n = diffnum::numel(shape);
  return {std::move(shape), std::vector<double>(n, value), requires_grad};
}

Tensor Tensor::scalar(double value, bool requires_grad) { return {Shape{}, {value}, requires_grad}; }

Tensor Tensor::vector(std::vector<double> data, bool requires_grad) {
  Shape s{data.size()};
  return {std::move(s), std::move(data), requires_grad};
}

std::size_t Tensor::rows() const {
  if (dim() != 2) throw ShapeError("rows() needs a matrix, got " + to_string(shape()));
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (dim() != 2) throw ShapeError("cols() needs a matrix, got " + to_string(shape()));
  return shape()[1];
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() needs a single element, got " + to_string(shape()));
  return node_->value[0];
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return node_->grad;
}

Tensor Tensor::detach() const { return {shape(), data(), false}; }

Tensor Tensor::clone() const { return {shape(), data(), requires_grad()}; }

Tensor Tensor::from_node(std::shared_ptr<Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

void Tensor::backward() const {
  if (numel() != 1) throw ShapeError("backward() needs a scalar loss, got " + to_string(shape()));
  if (!node_->requires_grad) throw Error("loss does not depend on any tensor requiring a gradient");

  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node* child = n->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  // Intermediate gradients are scratch space; only leaves keep theirs.
  for (Node* n : order) {
    if (n->backward_fn) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
}

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (any) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& t : inputs) node->inputs.push_back(t.node_ptr());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor::from_node(std::move(node));
}

}  // namespace invdes::diffnum
