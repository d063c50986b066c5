#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fd.hpp"
#include "programs.hpp"
#include "invdes/circuit_ir/topology.hpp"
#include "invdes/diffnum/init.hpp"
#include "invdes/diffnum/ops.hpp"
#include "invdes/error.hpp"
#include "invdes/forward_model/train.hpp"
#include "invdes/inverse/design.hpp"
#include "invdes/layout/layout.hpp"
#include "invdes/oracle/oracle.hpp"

namespace ci = invdes::circuit_ir;
namespace dn = invdes::diffnum;
namespace fm = invdes::forward_model;
namespace inv = invdes::inverse;
using dn::Tensor;
using invdes::PerformanceVector;

namespace {

/// Outputs equal the scaled parameters in the first slots; the codec is the identity.
class IdentitySurrogate : public inv::Surrogate {
 public:
  explicit IdentitySurrogate(std::size_t n) : n_(n) {}
  [[nodiscard]] std::size_t num_params() const override { return n_; }
  [[nodiscard]] Tensor predict(const Tensor& x) const override {
    std::vector<std::size_t> idx(16);
    std::vector<double> keep(16, 0.0);
    for (std::size_t i = 0; i < 16; ++i) {
      idx[i] = i < n_ ? i : 0;
      keep[i] = i < n_ ? 1.0 : 0.0;
    }
    return dn::mul(dn::index_select(x, idx), Tensor::vector(keep));
  }
  [[nodiscard]] double encode(std::size_t, double raw) const override { return raw; }
  [[nodiscard]] double decode(std::size_t, double z) const override { return z; }

 private:
  std::size_t n_;
};

inv::DesignProblem box_problem(double t0, double t1) {
  inv::DesignProblem p;
  p.params = {{"a", 0.1, 10.0, 1.0}, {"b", 0.1, 10.0, 1.0}};
  p.target.values[0] = t0;
  p.target.values[1] = t1;
  p.target.mask.set(0);
  p.target.mask.set(1);
  return p;
}

const ci::TopologyRegistry& oracles() {
  static const auto reg = ci::TopologyRegistry::load(invdes::testing::oracle_registry());
  return reg;
}

const ci::TopologyRegistry& library() {
  static const auto reg = ci::TopologyRegistry::load(invdes::testing::library_registry());
  return reg;
}

fm::ModelConfig small_config() {
  fm::ModelConfig cfg;
  cfg.dim = 16;
  cfg.hidden = 16;
  cfg.head_hidden = 32;
  return cfg;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST(Gate, ReferenceValues) {
  EXPECT_EQ(inv::gate(0.05), 0.5);
  EXPECT_NEAR(inv::gate(0.0), 1.0 - sigmoid(-2.5), 1e-15);
  EXPECT_NEAR(inv::gate(0.0), 0.92414, 1e-5);
  EXPECT_NEAR(inv::gate(0.15), 1.0 - sigmoid(5.0), 1e-15);
  EXPECT_NEAR(inv::gate(0.15), 0.00669, 1e-5);
}

TEST(Gate, BoundedAndDecreasing) {
  dn::Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    double a = rng.uniform(-0.5, 0.6), b = rng.uniform(-0.5, 0.6);
    if (a > b) std::swap(a, b);
    EXPECT_GT(inv::gate(a), 0.0);
    EXPECT_LT(inv::gate(a), 1.0);
    EXPECT_GE(inv::gate(a), inv::gate(b));
  }
  const double g = inv::gate(Tensor::scalar(0.07)).item();
  EXPECT_DOUBLE_EQ(g, inv::gate(0.07));
}

TEST(TotalLoss, Composition) {
  EXPECT_NEAR(inv::total_loss(Tensor::scalar(0.05), Tensor::scalar(1.0)).item(), 0.06, 1e-15);
  EXPECT_EQ(inv::total_loss(Tensor::scalar(0.3), Tensor::scalar(0.0)).item(), 0.3);
  EXPECT_EQ(inv::total_loss(Tensor::scalar(0.3), Tensor::scalar(5.0), 0.0).item(), 0.3);
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  const fm::ForwardModel model(small_config());
  int checked = 0;
  for (const auto* spec : library().all()) {
    const auto& g = library().graph(spec->id);
    const inv::GraphSurrogate surrogate(model, g, spec->parameters);
    const auto& tmpl = surrogate.graph_template();
    const auto terms = invdes::layout::passive_terms(g, tmpl.param_names(), tmpl.param_scales());
    std::vector<double> target(16, 0.3), mask(16, 0.0);
    for (std::size_t m = 0; m < 16; ++m) mask[m] = spec->metric_mask.test(m) ? 1.0 : 0.0;
    auto loss = [&](const Tensor& x) {
      const Tensor perf = fm::masked_mse(surrogate.predict(x), Tensor::vector(target), Tensor::vector(mask));
      return inv::total_loss(perf, invdes::layout::layout_loss(terms, x));
    };
    const auto x0 = tmpl.scale(inv::init_params(spec->parameters, 3));
    const double h = 1e-6;
    bool near_step = false;
    for (const auto& t : terms) {
      if (t.param < 0) continue;
      const double v = t.coef * x0[static_cast<std::size_t>(t.param)];
      const double dv = std::abs(t.coef) * h * 4;
      if (invdes::layout::decompose(v - dv, t.kind).n != invdes::layout::decompose(v + dv, t.kind).n) near_step = true;
    }
    if (near_step) continue;
    Tensor x = Tensor::vector(x0, true);
    loss(x).backward();
    auto f = [&](const std::vector<double>& v) { return loss(Tensor::vector(v)).item(); };
    EXPECT_LT(invdes::testing::vector_rel_err(x.grad(), invdes::testing::central_diff(f, x0, h)), 1e-4) << spec->code;
    ++checked;
  }
  EXPECT_GE(checked, 15);
}

TEST(Init, LogUniformMedian) {
  const std::vector<ci::ParamSpec> params = {{"C", 100e-15, 600e-15, 1e-13}};
  std::vector<double> draws;
  for (std::uint64_t s = 0; s < 4001; ++s) {
    const double c = inv::init_params(params, s).values()[0];
    ASSERT_GE(c, 100e-15);
    ASSERT_LE(c, 600e-15);
    draws.push_back(c);
  }
  std::nth_element(draws.begin(), draws.begin() + 2000, draws.end());
  EXPECT_NEAR(draws[2000], std::sqrt(100e-15 * 600e-15), 0.03 * 244.9e-15);
}

TEST(Init, DegenerateAndDeterministic) {
  const std::vector<ci::ParamSpec> params = {{"R", 50.0, 50.0, 1000.0}, {"W", 1e-6, 1e-5, 1e-6}};
  const auto a = inv::init_params(params, 9);
  EXPECT_EQ(a.values()[0], 50.0);
  EXPECT_EQ(a.values(), inv::init_params(params, 9).values());
  EXPECT_NE(a.values()[1], inv::init_params(params, 10).values()[1]);
}

TEST(MeanRelativeError, SkipsUnmaskedAndZeroTargets) {
  PerformanceVector t, p;
  t.values = {1.0, 2.0, 0.0, 4.0};
  p.values = {1.1, 2.0, 5.0, 100.0};
  invdes::MetricMask m;
  m.set(0);
  m.set(1);
  m.set(2);
  EXPECT_NEAR(inv::mean_relative_error(p, t, m), 0.05, 1e-12);
  EXPECT_THROW((void)inv::mean_relative_error(p, t, invdes::MetricMask(0b100)), invdes::DomainError);
}

TEST(Optimize, ConvexStubConverges) {
  const IdentitySurrogate s(2);
  inv::DesignConfig cfg;
  cfg.lr = 1e-2;
  cfg.converge_rel_err = 1e-4;
  const auto r = inv::optimize(box_problem(3.0, 0.7), s, 1, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x.values()[0], 3.0, 1e-3);
  EXPECT_NEAR(r.x.values()[1], 0.7, 1e-3);
  std::size_t steps = 0;
  for (const auto& a : r.attempts) steps += a.steps;
  EXPECT_LT(steps, 5000U);
}

TEST(Optimize, UnreachableTargetIsBestEffort) {
  const IdentitySurrogate s(2);
  inv::DesignConfig cfg;
  cfg.max_steps = 3000;
  const auto r = inv::optimize(box_problem(20.0, 30.0), s, 1, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.restarts, cfg.max_restarts);
  EXPECT_NEAR(r.x.values()[0], 10.0, 1e-6);
  EXPECT_NEAR(r.x.values()[1], 10.0, 1e-6);
}

TEST(Optimize, EveryIterateWithinBounds) {
  const IdentitySurrogate s(2);
  inv::DesignConfig cfg;
  cfg.max_steps = 2000;
  std::size_t calls = 0;
  cfg.on_step = [&](const std::vector<double>& x) {
    ++calls;
    for (double v : x) {
      ASSERT_GE(v, 0.1);
      ASSERT_LE(v, 10.0);
    }
  };
  (void)inv::optimize(box_problem(0.05, 12.0), s, 4, cfg);
  EXPECT_GT(calls, 0U);
}

TEST(Optimize, TraceBestSoFarNonincreasing) {
  const IdentitySurrogate s(2);
  const auto r = inv::optimize(box_problem(2.0, 5.0), s, 2);
  ASSERT_FALSE(r.trace.empty());
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
  EXPECT_EQ(r.trace.back(), r.loss);
}

TEST(Optimize, SeedDeterminesResult) {
  const fm::ForwardModel model(small_config());
  const auto& spec = library().by_code("CGLNA");
  PerformanceVector target;
  for (std::size_t m = 0; m < 16; ++m) {
    if (spec.metric_mask.test(m)) {
      target.values[m] = 1.0 + 0.1 * static_cast<double>(m);
      target.mask.set(m);
    }
  }
  fm::ForwardModel fitted = model.clone();
  fitted.set_codec(fm::TargetCodec::fit({target, [&] {
                                           auto t = target;
                                           for (auto& v : t.values) v *= 2.0;
                                           return t;
                                         }()}));
  const inv::GraphSurrogate sf(fitted, library().graph(spec.id), spec.parameters);
  const auto problem = inv::DesignProblem::for_topology(spec, library().graph(spec.id), target);
  inv::DesignConfig cfg;
  cfg.max_steps = 400;
  const auto a = inv::optimize(problem, sf, 11, cfg);
  const auto b = inv::optimize(problem, sf, 11, cfg);
  EXPECT_EQ(a.x.values(), b.x.values());
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.restarts, b.restarts);
}

TEST(Oracle, ValidationArithmetic) {
  const auto& fam = invdes::oracle::family("rc_amp");
  inv::DesignResult r;
  r.topology_id = fam.topology_id;
  r.x = invdes::oracle::sample_parameters(fam, 5);
  const auto truth = invdes::oracle::eval_oracle(fam, r.x);

  r.target = truth;
  auto v = inv::validate_with_oracle(r, fam);
  EXPECT_EQ(v.mean_rel_err, 0.0);
  EXPECT_TRUE(v.success);
  EXPECT_TRUE(r.success);

  r.target = truth;
  r.target.values[1] = truth.values[1] / 1.3;  // VGain off by 30%
  v = inv::validate_with_oracle(r, fam);
  EXPECT_NEAR(v.mean_rel_err, 0.1, 1e-12);
  EXPECT_TRUE(v.success);

  r.target = truth;
  for (auto& x : r.target.values) x /= 1.25;
  v = inv::validate_with_oracle(r, fam);
  EXPECT_NEAR(v.mean_rel_err, 0.25, 1e-12);
  EXPECT_FALSE(v.success);
  EXPECT_FALSE(r.success);
}

TEST(Oracle, WrongFamilyRejected) {
  inv::DesignResult r;
  r.topology_id = library().by_code("CGLNA").id;
  EXPECT_THROW((void)inv::validate_with_oracle(r, invdes::oracle::family("rc_amp")), invdes::Error);
}

TEST(Pipeline, EmptyTargetRejected) {
  const invdes::classifier::Classifier cls(1);
  const fm::ForwardModel model(small_config());
  EXPECT_THROW((void)inv::end_to_end_design(PerformanceVector{}, cls, model, oracles(), {}), invdes::Error);
}

TEST(Pipeline, ForcedWrongTopologyRuns) {
  const auto& fam = invdes::oracle::family("rc_amp");
  std::vector<PerformanceVector> ys;
  for (std::uint64_t s = 0; s < 20; ++s) ys.push_back(invdes::oracle::eval_oracle(fam, invdes::oracle::sample_parameters(fam, s)));
  fm::ForwardModel model(small_config());
  model.set_codec(fm::TargetCodec::fit(ys));
  const invdes::classifier::Classifier cls(1);
  inv::PipelineOptions opt;
  opt.topology = "rdiv_att";
  opt.config.max_steps = 300;
  opt.config.max_restarts = 1;
  const auto r = inv::end_to_end_design(ys[0], cls, model, oracles(), opt);
  EXPECT_EQ(r.topology_code, "rdiv_att");
  EXPECT_TRUE(r.oracle_rel_err.has_value());
  EXPECT_TRUE(r.target.mask.test(1));
  EXPECT_FALSE(r.target.mask.test(0));
}

TEST(Result, JsonCarriesTraceOnRequest) {
  const IdentitySurrogate s(2);
  const auto r = inv::optimize(box_problem(2.0, 5.0), s, 2);
  EXPECT_EQ(r.to_json(false).find("\"trace\""), std::string::npos);
  EXPECT_NE(r.to_json(true).find("\"trace\""), std::string::npos);
}
