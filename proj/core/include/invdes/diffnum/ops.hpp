#pragma once

#include <cstddef>
#include <vector>

#include "invdes/diffnum/tensor.hpp"

namespace invdes::diffnum {

// Elementwise binary ops accept equal shapes, or a matrix {r, c} with a
// row vector {c} (or {1, c}) broadcast over rows, or a scalar right operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);

/// {r, k} x {k, c} -> {r, c}.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& a);
/// Matrix reduction: axis 0 -> {c}, axis 1 -> {r}.
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a);

/// Gradient at exactly 0 is 0.
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
/// DomainError on a nonpositive entry.
Tensor log(const Tensor& a);
/// Elementwise a^p. DomainError for a negative base with a non-integer p,
/// or a zero base with p < 1 when a gradient is needed.
Tensor pow(const Tensor& a, double p);
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);

/// Along the last axis.
Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);

/// Vectors: axis 0 only. Matrices: axis 0 stacks rows, axis 1 joins columns.
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

/// Gathers entries (vector) or rows (matrix).
Tensor index_select(const Tensor& a, const std::vector<std::size_t>& index);

/// out[index[i]] += a[i] over entries (vector) or rows (matrix); `size` slots.
Tensor scatter_add(const Tensor& a, const std::vector<std::size_t>& index, std::size_t size);

Tensor reshape(const Tensor& a, Shape shape);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator+(const Tensor& a, double s) { return add_scalar(a, s); }
inline Tensor operator*(const Tensor& a, double s) { return mul_scalar(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return mul_scalar(a, s); }

}  // namespace invdes::diffnum
