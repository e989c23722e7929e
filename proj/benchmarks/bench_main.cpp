#include <benchmark/benchmark.h>

#include "gcnrn/coarsening.hpp"
#include "gcnrn/data.hpp"
#include "gcnrn/layers.hpp"
#include "gcnrn/model.hpp"
#include "gcnrn/rng.hpp"
#include "gcnrn/training.hpp"

namespace {

using namespace gcnrn;

SyntheticData make_data(index_t n) {
  SyntheticSpec spec;
  spec.n = n;
  spec.samples_per_class = 64;
  return gen_synthetic(spec);
}

void BM_Laplacian(benchmark::State& state) {
  auto data = make_data(state.range(0));
  for (auto _ : state) {
    Laplacian lap(data.graph);
    benchmark::DoNotOptimize(lap.lambda_max());
  }
}
BENCHMARK(BM_Laplacian)->Arg(100)->Arg(400)->Arg(1600);

void BM_Graclus(benchmark::State& state) {
  auto data = make_data(state.range(0));
  for (auto _ : state) {
    auto h = build_coarsening_hierarchy(data.graph, 2, 1);
    benchmark::DoNotOptimize(h.padded_size(0));
  }
}
BENCHMARK(BM_Graclus)->Arg(100)->Arg(400)->Arg(1600);

void BM_ChebConvForwardBackward(benchmark::State& state) {
  auto data = make_data(100);
  Laplacian lap(data.graph);
  const int order = static_cast<int>(state.range(0));
  ChebConv conv("conv", lap, order, 32, 32);
  SeededRng rng(5);
  conv.init(rng);
  NodeTensor x(100, 64, 32);
  x.data.setRandom();
  for (auto _ : state) {
    NodeTensor y = conv.forward(x);
    NodeTensor g = conv.backward(y);
    benchmark::DoNotOptimize(g.data.data());
  }
}
BENCHMARK(BM_ChebConvForwardBackward)->Arg(2)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void model_step(benchmark::State& state, RelationKind kind) {
  auto data = make_data(100);
  ModelConfig config = ModelConfig::synthetic_preset();
  config.relation = kind;
  HybridModel model(data.graph, 2, config);
  AdamOptimizer opt(model.params(), config.adam);
  Matrix x = data.dataset.x.topRows(64);
  std::vector<int> y(data.dataset.y.begin(), data.dataset.y.begin() + 64);
  for (auto _ : state) {
    auto out = model.forward(x, Mode::kTrain);
    auto [loss, grad] = softmax_cross_entropy(out.logits, y);
    model.backward(grad);
    opt.step();
    benchmark::DoNotOptimize(loss);
  }
}

void BM_TrainStepHybrid(benchmark::State& state) { model_step(state, RelationKind::kModified); }
void BM_TrainStepGcnnOnly(benchmark::State& state) { model_step(state, RelationKind::kNone); }
BENCHMARK(BM_TrainStepHybrid)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainStepGcnnOnly)->Unit(benchmark::kMillisecond);

void BM_Inference(benchmark::State& state) {
  auto data = make_data(100);
  HybridModel model(data.graph, 2, ModelConfig::synthetic_preset());
  Matrix x = data.dataset.x.topRows(64);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict_proba(x).data());
}
BENCHMARK(BM_Inference)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
