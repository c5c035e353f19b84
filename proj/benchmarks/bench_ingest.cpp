#include "iotddos/ingest.hpp"
#include "iotddos/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace iotddos;

namespace {

std::vector<PacketRecord> packets() {
  ScenarioConfig c = default_scenario(42);
  c.capture_length = 200.0;
  c.attacks.min_duration = 30.0;
  c.attacks.max_duration = 40.0;
  return overlay_scenario(c).packets;
}

void BM_PcapEncode(benchmark::State& state) {
  const auto pkts = packets();
  for (auto _ : state) benchmark::DoNotOptimize(encode_pcap(pkts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pkts.size()));
}
BENCHMARK(BM_PcapEncode)->Unit(benchmark::kMillisecond);

void BM_PcapParse(benchmark::State& state) {
  const auto bytes = encode_pcap(packets());
  for (auto _ : state) benchmark::DoNotOptimize(parse_pcap(bytes));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_PcapParse)->Unit(benchmark::kMillisecond);

void BM_CsvParse(benchmark::State& state) {
  const auto text = encode_packet_csv(packets());
  for (auto _ : state) benchmark::DoNotOptimize(parse_packet_csv(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_CsvParse)->Unit(benchmark::kMillisecond);

} // namespace
