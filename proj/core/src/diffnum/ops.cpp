#include "invdes/diffnum/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace invdes::diffnum {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

enum class Broadcast { same, row, scalar };

Broadcast broadcast_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (a.dim() == 2 && b.numel() == a.cols() &&
      (b.dim() == 1 || (b.dim() == 2 && b.shape()[0] == 1))) {
    return Broadcast::row;
  }
  if (b.dim() == 0) return Broadcast::scalar;
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " +
                   to_string(b.shape()));
}

// Calls fn(i, j) for every element i of a paired with element j of b.
struct Pairing {
  Broadcast mode;
  std::size_t cols;
  template <class Fn>
  void each(std::size_t n, Fn fn) const {
    switch (mode) {
      case Broadcast::same:
        for (std::size_t i = 0; i < n; ++i) fn(i, i);
        break;
      case Broadcast::row:
        for (std::size_t i = 0; i < n;) {
          for (std::size_t j = 0; j < cols; ++j, ++i) fn(i, j);
        }
        break;
      case Broadcast::scalar:
        for (std::size_t i = 0; i < n; ++i) fn(i, std::size_t{0});
        break;
    }
  }
};

// f(a, b) forward; da(a, b, out) and db(a, b, out) are partial derivatives.
template <class F, class DA, class DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, F f, DA da, DB db) {
  const Broadcast mode = broadcast_mode(a, b, name);
  const Pairing pairing{mode, a.dim() == 2 ? a.cols() : 1};
  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<double> out(av.size());
  pairing.each(av.size(), [&](std::size_t i, std::size_t j) { out[i] = f(av[i], bv[j]); });
  return make_result(a.shape(), std::move(out), {a, b}, [pairing, da, db](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    const auto& g = self.grad;
    const auto& x = na.value;
    const auto& y = nb.value;
    const auto& o = self.value;
    if (na.requires_grad) {
      auto& ga = na.grad_buffer();
      pairing.each(g.size(), [&](std::size_t i, std::size_t j) { ga[i] += g[i] * da(x[i], y[j], o[i]); });
    }
    if (nb.requires_grad) {
      auto& gb = nb.grad_buffer();
      pairing.each(g.size(), [&](std::size_t i, std::size_t j) { gb[j] += g[i] * db(x[i], y[j], o[i]); });
    }
  });
}

// f(a) forward; d(a, out) derivative.
template <class F, class D>
Tensor unary(const Tensor& a, F f, D d) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  return make_result(a.shape(), std::move(out), {a}, [d](Node& self) {
    Node& na = *self.inputs[0];
    auto& ga = na.grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * d(na.value[i], self.value[i]);
  });
}

void require_matrix(const Tensor& a, const char* op) {
  if (a.dim() != 2) throw ShapeError(std::string(op) + " needs a matrix, got " + to_string(a.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "div", [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t r = a.rows(), k = a.cols(), c = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ, " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  std::vector<double> out(r * c);
  Map(out.data(), r, c).noalias() = MapC(a.data().data(), r, k) * MapC(b.data().data(), k, c);
  return make_result({r, c}, std::move(out), {a, b}, [r, k, c](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    MapC g(self.grad.data(), r, c);
    if (na.requires_grad) {
      Map(na.grad_buffer().data(), r, k).noalias() += g * MapC(nb.value.data(), k, c).transpose();
    }
    if (nb.requires_grad) {
      Map(nb.grad_buffer().data(), k, c).noalias() += MapC(na.value.data(), r, k).transpose() * g;
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result({}, {s}, {a}, [](Node& self) {
    auto& ga = self.inputs[0]->grad_buffer();
    const double g = self.grad[0];
    for (auto& x : ga) x += g;
  });
}

Tensor sum(const Tensor& a, std::size_t axis) {
  require_matrix(a, "sum(axis)");
  const std::size_t r = a.rows(), c = a.cols();
  if (axis > 1) throw ShapeError("sum: axis must be 0 or 1");
  const auto& av = a.data();
  std::vector<double> out(axis == 0 ? c : r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[axis == 0 ? j : i] += av[i * c + j];
  }
  Shape s{out.size()};
  return make_result(std::move(s), std::move(out), {a}, [r, c, axis](Node& self) {
    auto& ga = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[axis == 0 ? j : i];
    }
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of an empty tensor");
  return mul_scalar(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.data()) {
    if (!(v > 0.0)) throw DomainError("log of nonpositive value " + std::to_string(v));
  }
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor pow(const Tensor& a, double p) {
  const bool integral = std::floor(p) == p;
  for (double v : a.data()) {
    if (v < 0.0 && !integral) throw DomainError("pow: negative base with non-integer exponent");
    if (v == 0.0 && p < 0.0) throw DomainError("pow: zero base with negative exponent");
    if (v == 0.0 && p < 1.0 && p != 0.0 && a.requires_grad()) {
      throw DomainError("pow: gradient undefined at zero base for exponent below 1");
    }
  }
  return unary(
      a, [p](double x) { return std::pow(x, p); },
      [p](double x, double) { return p == 0.0 ? 0.0 : p * std::pow(x, p - 1.0); });
}

Tensor abs(const Tensor& a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

namespace {

std::pair<std::size_t, std::size_t> rows_by_last_axis(const Tensor& a, const char* op) {
  if (a.dim() == 1) return {1, a.numel()};
  if (a.dim() == 2) return {a.rows(), a.cols()};
  throw ShapeError(std::string(op) + " needs a vector or matrix, got " + to_string(a.shape()));
}

}  // namespace

Tensor softmax(const Tensor& a) {
  const auto [r, c] = rows_by_last_axis(a, "softmax");
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = av.data() + i * c;
    double* y = out.data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) y[j] /= z;
  }
  return make_result(a.shape(), std::move(out), {a}, [r, c](Node& self) {
    auto& ga = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      const double* y = self.value.data() + i * c;
      const double* g = self.grad.data() + i * c;
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& a) {
  const auto [r, c] = rows_by_last_axis(a, "log_softmax");
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = av.data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(x[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x[j] - lse;
  }
  return make_result(a.shape(), std::move(out), {a}, [r, c](Node& self) {
    auto& ga = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      const double* y = self.value.data() + i * c;
      const double* g = self.grad.data() + i * c;
      double gs = 0.0;
      for (std::size_t j = 0; j < c; ++j) gs += g[j];
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j] - std::exp(y[j]) * gs;
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of no tensors");
  const std::size_t d = parts[0].dim();
  if (d == 0 || d > 2) throw ShapeError("concat needs vectors or matrices");
  if (axis >= d) throw ShapeError("concat axis out of range");
  for (const auto& p : parts) {
    if (p.dim() != d) throw ShapeError("concat: mixed ranks");
  }

  if (axis == 0) {
    const std::size_t c = d == 2 ? parts[0].cols() : 1;
    std::size_t rows = 0;
    std::vector<double> out;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
      if (d == 2 && p.cols() != c) throw ShapeError("concat: column counts differ");
      offsets.push_back(out.size());
      out.insert(out.end(), p.data().begin(), p.data().end());
      rows += d == 2 ? p.rows() : p.numel();
    }
    Shape s = d == 2 ? Shape{rows, c} : Shape{rows};
    return make_result(std::move(s), std::move(out), parts, [offsets](Node& self) {
      for (std::size_t k = 0; k < self.inputs.size(); ++k) {
        Node& in = *self.inputs[k];
        if (!in.requires_grad) continue;
        auto& g = in.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offsets[k] + i];
      }
    });
  }

  const std::size_t r = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) throw ShapeError("concat: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(r * total);
  std::size_t col = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& v = parts[k].data();
    const std::size_t w = widths[k];
    for (std::size_t i = 0; i < r; ++i) std::copy_n(v.data() + i * w, w, out.data() + i * total + col);
    col += w;
  }
  return make_result({r, total}, std::move(out), parts, [r, total, widths](Node& self) {
    std::size_t col = 0;
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      Node& in = *self.inputs[k];
      const std::size_t w = widths[k];
      if (in.requires_grad) {
        auto& g = in.grad_buffer();
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < w; ++j) g[i * w + j] += self.grad[i * total + col + j];
        }
      }
      col += w;
    }
  });
}

Tensor index_select(const Tensor& a, const std::vector<std::size_t>& index) {
  if (a.dim() != 1 && a.dim() != 2) throw ShapeError("index_select needs a vector or matrix");
  const std::size_t n = a.dim() == 2 ? a.rows() : a.numel();
  const std::size_t w = a.dim() == 2 ? a.cols() : 1;
  for (auto i : index) {
    if (i >= n) throw ShapeError("index_select: index " + std::to_string(i) + " out of range");
  }
  const auto& av = a.data();
  std::vector<double> out(index.size() * w);
  for (std::size_t k = 0; k < index.size(); ++k) std::copy_n(av.data() + index[k] * w, w, out.data() + k * w);
  Shape s = a.dim() == 2 ? Shape{index.size(), w} : Shape{index.size()};
  return make_result(std::move(s), std::move(out), {a}, [index, w](Node& self) {
    auto& ga = self.inputs[0]->grad_buffer();
    for (std::size_t k = 0; k < index.size(); ++k) {
      for (std::size_t j = 0; j < w; ++j) ga[index[k] * w + j] += self.grad[k * w + j];
    }
  });
}

Tensor scatter_add(const Tensor& a, const std::vector<std::size_t>& index, std::size_t size) {
  if (a.dim() != 1 && a.dim() != 2) throw ShapeError("scatter_add needs a vector or matrix");
  const std::size_t n = a.dim() == 2 ? a.rows() : a.numel();
  const std::size_t w = a.dim() == 2 ? a.cols() : 1;
  if (index.size() != n) throw ShapeError("scatter_add: index length does not match input");
  for (auto i : index) {
    if (i >= size) throw ShapeError("scatter_add: target " + std::to_string(i) + " out of range");
  }
  const auto& av = a.data();
  std::vector<double> out(size * w, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < w; ++j) out[index[k] * w + j] += av[k * w + j];
  }
  Shape s = a.dim() == 2 ? Shape{size, w} : Shape{size};
  return make_result(std::move(s), std::move(out), {a}, [index, w](Node& self) {
    auto& ga = self.inputs[0]->grad_buffer();
    for (std::size_t k = 0; k < index.size(); ++k) {
      for (std::size_t j = 0; j < w; ++j) ga[k * w + j] += self.grad[index[k] * w + j];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw ShapeError("reshape " + to_string(a.shape()) + " -> " + to_string(shape) + " changes size");
  }
  return make_result(std::move(shape), a.data(), {a}, [](Node& self) {
    auto& ga = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

}  // namespace invdes::diffnum
