#include <benchmark/benchmark.h>

#include "invdes/circuit_ir/topology.hpp"
#include "invdes/diffnum/init.hpp"
#include "invdes/diffnum/ops.hpp"
#include "invdes/inverse/design.hpp"
#include "invdes/layout/layout.hpp"

namespace ci = invdes::circuit_ir;
namespace dn = invdes::diffnum;
namespace inv = invdes::inverse;
namespace ly = invdes::layout;

static void BM_LayoutLossGradient(benchmark::State& state) {
  const auto reg = ci::TopologyRegistry::load(std::string(INVDES_DATA_DIR) + "/registry/library");
  const auto& spec = reg.by_id(static_cast<int>(state.range(0)));
  std::vector<std::string> names;
  std::vector<double> scales, x0;
  for (const auto& p : spec.parameters) {
    names.push_back(p.name);
    scales.push_back(p.scale);
    x0.push_back(0.5 * (p.lower + p.upper) / p.scale);
  }
  const auto terms = ly::passive_terms(reg.graph(spec.id), names, scales);
  for (auto _ : state) {
    dn::Tensor x = dn::Tensor::vector(x0, true);
    ly::layout_loss(terms, x).backward();
    benchmark::DoNotOptimize(x.grad());
  }
  state.SetLabel(spec.code + " passives=" + std::to_string(terms.size()));
}
BENCHMARK(BM_LayoutLossGradient)->Arg(0)->Arg(19)->Unit(benchmark::kMicrosecond);

static void BM_Decompose(benchmark::State& state) {
  dn::Rng rng(1);
  std::vector<double> values(4096);
  for (auto& v : values) v = std::exp(rng.uniform(0.0, 8.0));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ly::decompose(values[i++ & 4095], ly::PassiveKind::capacitor).area);
  }
}
BENCHMARK(BM_Decompose);

/// A full Stage-3 run on a library topology with an untrained surrogate and a
/// fixed step budget (per-step cost, not convergence speed).
static void BM_DesignSteps(benchmark::State& state) {
  const auto reg = ci::TopologyRegistry::load(std::string(INVDES_DATA_DIR) + "/registry/library");
  const auto& spec = reg.by_id(static_cast<int>(state.range(0)));
  invdes::PerformanceVector target, wide;
  for (std::size_t m = 0; m < invdes::kNumMetrics; ++m) {
    if (!spec.metric_mask.test(m)) continue;
    target.values[m] = 0.5;
    wide.values[m] = 2.0;
    target.mask.set(m);
  }
  wide.mask = target.mask;
  invdes::forward_model::ForwardModel model;
  model.set_codec(invdes::forward_model::TargetCodec::fit({target, wide}));
  const inv::GraphSurrogate surrogate(model, reg.graph(spec.id), spec.parameters);
  const auto problem = inv::DesignProblem::for_topology(spec, reg.graph(spec.id), target);
  inv::DesignConfig cfg;
  cfg.max_steps = 200;
  cfg.max_restarts = 0;
  cfg.window = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(inv::optimize(problem, surrogate, 1, cfg).loss);
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_DesignSteps)->Arg(0)->Unit(benchmark::kMillisecond);
