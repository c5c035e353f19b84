#include "iotddos/features.hpp"
#include "iotddos/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace iotddos;

namespace {

const std::vector<PacketRecord>& capture() {
  static const std::vector<PacketRecord> packets = [] {
    ScenarioConfig c = default_scenario(42);
    c.capture_length = 300.0;
    c.attacks.min_duration = 40.0;
    c.attacks.max_duration = 50.0;
    return overlay_scenario(c).packets;
  }();
  return packets;
}

void BM_Simulate(benchmark::State& state) {
  ScenarioConfig c = default_scenario(42);
  c.capture_length = 300.0;
  c.attacks.min_duration = 40.0;
  c.attacks.max_duration = 50.0;
  for (auto _ : state) benchmark::DoNotOptimize(overlay_scenario(c));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

void BM_ExtractFeatures(benchmark::State& state) {
  const auto& pkts = capture();
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(pkts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pkts.size()));
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMillisecond);

void BM_StreamingExtractor(benchmark::State& state) {
  const auto& pkts = capture();
  for (auto _ : state) {
    StreamingFeatureExtractor ex;
    std::size_t windows = 0;
    for (const auto& p : pkts) windows += ex.push(p).size();
    windows += ex.finish().size();
    benchmark::DoNotOptimize(windows);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pkts.size()));
}
BENCHMARK(BM_StreamingExtractor)->Unit(benchmark::kMillisecond);

} // namespace
