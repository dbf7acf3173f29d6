#include <benchmark/benchmark.h>

#include <vector>

#include "mrfdens/graph.hpp"
#include "mrfdens/hammersley.hpp"
#include "mrfdens/histogram.hpp"
#include "mrfdens/relunet.hpp"
#include "mrfdens/rng.hpp"
#include "mrfdens/synth.hpp"

namespace {

using namespace mrfdens;

void BM_MaximalCliquesGridDiagPower(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0));
  const MrfGraph g = power(make_grid(6, 6, true), t);
  for (auto _ : state) {
    benchmark::DoNotOptimize(maximal_cliques(g).cliques.size());
  }
}
BENCHMARK(BM_MaximalCliquesGridDiagPower)->Arg(1)->Arg(2)->Arg(3);

void BM_CellPairL1(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  Rng rng(1);
  ProductHistogram structured;
  structured.d = 3;
  structured.b = b;
  for (const auto& V : {std::vector<int>{1, 2}, std::vector<int>{2, 3}}) {
    HistogramFactor f = make_constant_factor(3, V, b, 8.0, 1.0);
    for (double& w : f.w) w = rng.uniform(0.0, 2.0);
    structured.factors.push_back(std::move(f));
  }
  ProductHistogram full;
  full.d = 3;
  full.b = b;
  HistogramFactor g = make_constant_factor(3, {1, 2, 3}, b, 2.0, 1.0);
  for (double& w : g.w) w = rng.uniform(0.0, 2.0);
  full.factors.push_back(std::move(g));
  for (auto _ : state) {
    benchmark::DoNotOptimize(l1_distance(structured, full));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b) * b * b);
}
BENCHMARK(BM_CellPairL1)->Arg(8)->Arg(16)->Arg(32);

void BM_ChainSample(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const ChainDensity chain(d, cosine_potential(0.5), 256);
  Rng rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(chain.sample(rng));
  }
}
BENCHMARK(BM_ChainSample)->Arg(3)->Arg(8)->Arg(16);

void BM_LossAndGrad(benchmark::State& state) {
  Rng rng(11);
  CliqueNetModel model =
      make_clique_model(4, {{1, 2}, {2, 3}, {3, 4}}, {{2, 24, 1}, {2, 24, 1}, {2, 24, 1}}, 2.0,
                        rng);
  std::vector<std::vector<double>> data(256), norm(256);
  for (auto* block : {&data, &norm})
    for (auto& x : *block) {
      x.resize(4);
      for (double& c : x) c = rng.u01();
    }
  std::vector<double> grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_grad(model, data, norm, grad));
  }
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_LossAndGrad);

void BM_HcReconstruct(benchmark::State& state) {
  const ChainDensity chain(4, cosine_potential(0.5), 128);
  DensityOracle oracle;
  oracle.d = 4;
  oracle.eval = [&chain](const std::vector<double>& x) { return chain.eval(x); };
  const HcFactorization fac = hc_potentials(oracle, maximal_cliques(make_path(4)), 8);
  Rng rng(3);
  std::vector<double> x(4);
  for (auto _ : state) {
    for (double& c : x) c = rng.u01();
    benchmark::DoNotOptimize(fac.reconstruct(x));
  }
}
BENCHMARK(BM_HcReconstruct);

}  // namespace

BENCHMARK_MAIN();
