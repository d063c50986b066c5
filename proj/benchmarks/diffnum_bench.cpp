#include <benchmark/benchmark.h>

#include "invdes/diffnum/init.hpp"
#include "invdes/diffnum/nn.hpp"
#include "invdes/diffnum/ops.hpp"

namespace dn = invdes::diffnum;

static void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const dn::Tensor a = dn::xavier_uniform({n, n}, 1);
  const dn::Tensor b = dn::xavier_uniform({n, n}, 2);
  for (auto _ : state) {
    dn::Tensor w(b.shape(), b.data(), true);
    dn::sum(dn::matmul(a, w)).backward();
    benchmark::DoNotOptimize(w.grad());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(64)->Arg(256);

static void BM_MlpTrainStep(benchmark::State& state) {
  const dn::Mlp mlp({16, 256, 256, 256, 256, 20}, 3);
  auto params = mlp.parameters();
  for (auto& p : params) p.set_requires_grad(true);
  const dn::Tensor x = dn::xavier_uniform({256, 16}, 4);
  for (auto _ : state) {
    for (auto& p : params) p.zero_grad();
    dn::mean(dn::log_softmax(mlp.forward(x))).backward();
  }
}
BENCHMARK(BM_MlpTrainStep)->Unit(benchmark::kMillisecond);
