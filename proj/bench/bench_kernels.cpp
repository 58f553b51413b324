#include <benchmark/benchmark.h>

#include <numeric>

#include "runperf/evalharness.hpp"
#include "runperf/rng.hpp"
#include "runperf/split_search.hpp"
#include "runperf/synthetic.hpp"

using namespace runperf;

namespace {

struct GrowInput {
  FeatureMatrix x;
  std::vector<GradientPair> grad;
  std::vector<int> features;
};

GrowInput make_input(std::size_t rows, std::size_t cols) {
  GrowInput in;
  Rng rng(42);
  in.x = FeatureMatrix(rows, cols);
  for (auto& v : in.x.values) v = rng.normal();
  in.grad.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) in.grad[i] = {in.x(i, 0) + 0.5 * rng.normal(), 0.25};
  in.features.resize(cols);
  std::iota(in.features.begin(), in.features.end(), 0);
  return in;
}

GrowParams depth7() {
  GrowParams p;
  p.max_depth = 7;
  return p;
}

void BM_GrowReference(benchmark::State& state) {
  const auto in = make_input(static_cast<std::size_t>(state.range(0)), kLogitsDim);
  for (auto _ : state) benchmark::DoNotOptimize(grow_tree_reference(in.x, in.grad, in.features, depth7()));
}

void BM_GrowSerial(benchmark::State& state) {
  const auto in = make_input(static_cast<std::size_t>(state.range(0)), kLogitsDim);
  const PresortedColumns sorted(in.x);
  for (auto _ : state) benchmark::DoNotOptimize(grow_tree(in.x, sorted, in.grad, in.features, depth7(), false));
}

void BM_GrowParallel(benchmark::State& state) {
  const auto in = make_input(static_cast<std::size_t>(state.range(0)), kLogitsDim);
  const PresortedColumns sorted(in.x);
  for (auto _ : state) benchmark::DoNotOptimize(grow_tree(in.x, sorted, in.grad, in.features, depth7(), true));
}

DatasetSlice protocol_slice() {
  SynthConfig cfg;
  cfg.runners = 200;
  cfg.rps = {3};
  cfg.separation = 6.0;
  cfg.frames = 0;
  const auto ds = generate_synthetic(cfg, 1);
  return build_current(ds.clips, ds.splits, 3, ContextMode::kRaw, 2);
}

void BM_Protocol(benchmark::State& state, Execution execution) {
  const auto data = protocol_slice();
  ProtocolConfig c;
  c.iterations = 8;
  c.classifier.boosted.n_rounds = 20;
  c.classifier.boosted.max_depth = 7;
  for (auto _ : state) benchmark::DoNotOptimize(run_protocol(data, c, execution));
}

}  // namespace

BENCHMARK(BM_GrowReference)->Arg(150)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GrowSerial)->Arg(150)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GrowParallel)->Arg(150)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Protocol, sequential, Execution::kSequential)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Protocol, parallel, Execution::kParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
