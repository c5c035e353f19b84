#include "iotddos/cart.hpp"
#include "iotddos/kdtree.hpp"
#include "iotddos/model.hpp"
#include "iotddos/rng.hpp"

#include <benchmark/benchmark.h>

using namespace iotddos;

namespace {

struct Data {
  Matrix X;
  std::vector<ClassLabel> y;
};

Data make(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Data d{Matrix(n, kFeatureCount), std::vector<ClassLabel>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const bool attack = rng.uniform01() < 0.9;
    for (std::size_t c = 0; c < kFeatureCount; ++c) d.X(i, c) = rng.normal(attack ? 1.0 : 0.0, 1.0);
    d.y[i] = attack ? ClassLabel::Attack : ClassLabel::Normal;
  }
  return d;
}

void BM_KdTreeBuild(benchmark::State& state) {
  const auto d = make(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(KdTree(d.X));
}
BENCHMARK(BM_KdTreeBuild)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_KdTreeQuery(benchmark::State& state) {
  const auto d = make(static_cast<std::size_t>(state.range(0)), 2);
  const auto q = make(1024, 3);
  const KdTree tree(d.X);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.knn(q.X.row(i), 5));
    i = (i + 1) % q.X.rows();
  }
}
BENCHMARK(BM_KdTreeQuery)->Arg(10'000)->Arg(100'000);

void BM_DecisionTreeFit(benchmark::State& state) {
  const auto d = make(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(DecisionTree::fit(d.X, d.y, TreeParams{}));
}
BENCHMARK(BM_DecisionTreeFit)->Arg(10'000)->Arg(50'000)->Unit(benchmark::kMillisecond);

void BM_RandomForestFit(benchmark::State& state) {
  const auto d = make(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(RandomForest::fit(d.X, d.y, ForestParams{}, 1));
}
BENCHMARK(BM_RandomForestFit)->Arg(10'000)->Arg(50'000)->Unit(benchmark::kMillisecond);

void BM_ModelPredict(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  const auto d = make(20'000, 6);
  Hyperparameters hp;
  hp.nn.epochs = 2;
  const auto m = fit(kind, d.X, d.y, hp, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.predict_score(d.X.row(i)));
    i = (i + 1) % d.X.rows();
  }
  state.SetLabel(std::string(display_name(kind)));
}
BENCHMARK(BM_ModelPredict)->DenseRange(0, 4);

} // namespace
