#include "programs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fd.hpp"
#include "invdes/diffnum/init.hpp"
#include "invdes/diffnum/ops.hpp"

namespace invdes::testing {

using diffnum::Tensor;

namespace {

constexpr int kNumOps = 12;

double min_abs(const Tensor& t) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : t.data()) m = std::min(m, std::abs(v));
  return m;
}

}  // namespace

RandomProgram::RandomProgram(std::uint64_t seed) {
  diffnum::Rng rng(seed);
  rows_ = 2 + rng.below(3);
  cols_ = 2 + rng.below(3);
  for (std::size_t i = 0; i < rows_ * cols_; ++i) x0_.push_back(rng.uniform(-1.5, 1.5));
  for (std::size_t i = 0; i < cols_ * cols_; ++i) w0_.push_back(rng.uniform(-1.0, 1.0));
  const std::size_t steps = 3 + rng.below(5);
  // Track the shape so every drawn op is applicable.
  std::size_t r = rows_, c = cols_;
  bool used_w = false;
  for (std::size_t s = 0; s < steps; ++s) {
    int op = static_cast<int>(rng.below(kNumOps));
    if (!used_w && c == cols_ && s == 0) op = 1;
    if (op == 1 && c != cols_) op = 2;
    ops_.push_back(op);
    std::vector<double> k;
    std::vector<std::size_t> idx;
    switch (op) {
      case 1:
        used_w = true;
        break;
      case 6:
        c *= 2;
        break;
      case 7: {
        const std::size_t n = 1 + rng.below(4);
        for (std::size_t i = 0; i < n; ++i) idx.push_back(rng.below(r));
        r = n;
        break;
      }
      case 8: {
        const std::size_t slots = 1 + rng.below(r);
        for (std::size_t i = 0; i < r; ++i) idx.push_back(rng.below(slots));
        idx.push_back(slots);
        r = slots;
        break;
      }
      case 10:
        for (std::size_t j = 0; j < c; ++j) k.push_back(rng.uniform(-0.5, 0.5));
        break;
      case 11: {
        const std::size_t out = 2 + rng.below(3);
        for (std::size_t i = 0; i < c * out; ++i) k.push_back(rng.uniform(-1.0, 1.0));
        k.push_back(static_cast<double>(out));
        c = out;
        break;
      }
      default:
        break;
    }
    constants_.push_back(std::move(k));
    indices_.push_back(std::move(idx));
  }
  for (std::size_t i = 0; i < r * c; ++i) out_weights_.push_back(rng.uniform(-1.0, 1.0));
}

Tensor RandomProgram::evaluate(const Tensor& x, const Tensor& w, double* kink) const {
  using namespace diffnum;
  Tensor t = x;
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < ops_.size(); ++s) {
    const auto& k = constants_[s];
    const auto& idx = indices_[s];
    switch (ops_[s]) {
      case 0:
        t = mul(t, sigmoid(t));
        break;
      case 1:
        t = matmul(t, w);
        break;
      case 2:
        t = log(add_scalar(square(t), 1.0));
        break;
      case 3:
        t = exp(mul_scalar(sigmoid(t), 0.5));
        break;
      case 4:
        t = div(t, add_scalar(square(t), 1.0));
        break;
      case 5:
        t = softmax(t);
        break;
      case 6:
        t = concat({t, square(t)}, 1);
        break;
      case 7:
        t = index_select(t, idx);
        break;
      case 8:
        t = scatter_add(t, std::vector<std::size_t>(idx.begin(), idx.end() - 1), idx.back());
        break;
      case 9: {
        Tensor shifted = add_scalar(t, 0.25);
        nearest = std::min(nearest, min_abs(shifted));
        t = add(relu(shifted), mul_scalar(abs(t), 0.5));
        nearest = std::min(nearest, min_abs(t));
        t = pow(add_scalar(t, 0.5), 1.5);
        break;
      }
      case 10:
        t = add(t, Tensor({k.size()}, k));
        break;
      case 11: {
        const auto out = static_cast<std::size_t>(k.back());
        t = matmul(t, Tensor({k.size() / out, out}, std::vector<double>(k.begin(), k.end() - 1)));
        break;
      }
      default:
        throw std::logic_error("unknown op");
    }
  }
  if (kink != nullptr) *kink = nearest;
  return sum(mul(t, Tensor(t.shape(), out_weights_)));
}

double vector_rel_err(const std::vector<double>& a, const std::vector<double>& b, double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("vector_rel_err: size mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

GradCheck check_program(const RandomProgram& program, double h) {
  Tensor x(program.x_shape(), program.x0(), true);
  Tensor w(program.w_shape(), program.w0(), true);
  GradCheck out;
  Tensor y = program.evaluate(x, w, &out.kink);
  y.backward();
  std::vector<double> analytic = x.grad();
  const auto gw = w.grad();
  analytic.insert(analytic.end(), gw.begin(), gw.end());

  std::vector<double> p = program.x0();
  p.insert(p.end(), program.w0().begin(), program.w0().end());
  const std::size_t nx = program.x0().size();
  auto f = [&](const std::vector<double>& v) {
    Tensor xv(program.x_shape(), std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(nx)));
    Tensor wv(program.w_shape(), std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(nx), v.end()));
    return program.evaluate(xv, wv, nullptr).item();
  };
  out.rel_err = vector_rel_err(analytic, central_diff(f, p, h));
  return out;
}

}  // namespace invdes::testing
