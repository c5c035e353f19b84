#include "iotddos/features.hpp"
#include "iotddos/ingest.hpp"

#include "../support/test_data.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <vector>

using namespace iotddos;

namespace {

using Key = std::tuple<std::int64_t, std::uint32_t, std::uint16_t, std::uint32_t, std::uint16_t, int, std::uint32_t>;

Key key(const PacketRecord& r) {
  return {r.ts_us, r.src_ip.value, r.src_port, r.dst_ip.value, r.dst_port, static_cast<int>(r.proto), r.size};
}

std::map<Key, int> multiset(std::span<const PacketRecord> recs) {
  std::map<Key, int> m;
  for (const auto& r : recs) ++m[key(r)];
  return m;
}

// Bursty records so windows of every fill level (including empty) appear.
std::vector<PacketRecord> bursty(std::size_t n, std::uint64_t seed) {
  auto recs = testing::random_records(n, seed, 4);
  Rng rng(seed + 1);
  std::int64_t shift = 0;
  for (auto& r : recs) {
    if (rng.uniform01() < 0.01) shift += static_cast<std::int64_t>(rng.uniform_int(10'000'000, 40'000'000));
    r.ts_us += shift;
  }
  return recs;
}

} // namespace

TEST_SUITE("oracle.windows") {

TEST_CASE("per-device split is a partition of the input multiset") {
  auto recs = bursty(20000, 1);
  auto streams = split_by_device(recs);
  std::vector<PacketRecord> joined;
  for (const auto& s : streams) {
    CHECK(validate_stream(s).empty());
    joined.insert(joined.end(), s.packets.begin(), s.packets.end());
  }
  CHECK(multiset(joined) == multiset(recs));
}

TEST_CASE("window reassembly restores each stream and respects bounds") {
  auto recs = bursty(20000, 2);
  for (double width : {1.0, 10.0, 37.5}) {
    for (const auto& s : split_by_device(recs)) {
      auto w = window_partition(s, width);
      std::vector<PacketRecord> back;
      const auto t0 = s.packets.front().ts_us;
      const auto wus = seconds_to_us(width);
      for (std::size_t k = 0; k < w.size(); ++k) {
        CHECK(w[k].index == k);
        for (const auto& p : w[k].packets) {
          CHECK(p.ts_us >= t0 + static_cast<std::int64_t>(k) * wus);
          CHECK(p.ts_us < t0 + static_cast<std::int64_t>(k + 1) * wus);
        }
        back.insert(back.end(), w[k].packets.begin(), w[k].packets.end());
      }
      CHECK(back == s.packets);
      CHECK_FALSE(w.back().packets.empty());
    }
  }
}

TEST_CASE("window statistics recomputed naively") {
  auto recs = bursty(20000, 3);
  for (const auto& s : split_by_device(recs)) {
    auto w = window_partition(s, 10.0);
    auto st = stateful_features(w);
    REQUIRE(st.size() == w.size());
    double prev = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      double bytes = 0;
      std::set<std::uint32_t> d;
      for (const auto& p : w[k].packets) {
        bytes += p.size;
        d.insert(p.dst_ip.value);
      }
      CHECK(st[k].bandwidth == doctest::Approx(bytes / 10.0).epsilon(1e-12));
      CHECK(st[k].dest_count == static_cast<double>(d.size()));
      CHECK(st[k].dest_delta == (k == 0 ? 0.0 : static_cast<double>(d.size()) - prev));
      prev = static_cast<double>(d.size());
    }
  }
}

TEST_CASE("streaming extractor equals the batch pipeline") {
  auto recs = bursty(15000, 4);
  auto ds = extract_features(recs);
  std::map<std::tuple<std::uint32_t, std::size_t>, std::size_t> row_of;
  for (std::size_t i = 0; i < ds.size(); ++i) row_of[{ds.provenance[i].device_ip.value, ds.provenance[i].packet}] = i;

  StreamingFeatureExtractor ex(10.0);
  std::vector<StreamingFeatureExtractor::ClosedWindow> closed;
  for (const auto& r : recs) {
    auto c = ex.push(r);
    closed.insert(closed.end(), c.begin(), c.end());
    CHECK(ex.open_devices() <= 4);
  }
  auto c = ex.finish();
  closed.insert(closed.end(), c.begin(), c.end());

  std::size_t rows = 0;
  for (const auto& w : closed) {
    REQUIRE(w.rows.size() == w.packets.size());
    for (const auto& r : w.rows) {
      auto it = row_of.find({r.provenance.device_ip.value, r.provenance.packet});
      REQUIRE(it != row_of.end());
      CHECK(ds.provenance[it->second] == r.provenance);
      for (std::size_t f = 0; f < kFeatureCount; ++f) REQUIRE(ds.features(it->second, f) == r.features[f]);
      ++rows;
    }
  }
  CHECK(rows == ds.size());
}

TEST_CASE("device filter equals a linear scan") {
  auto recs = bursty(10000, 5);
  const std::set<Ipv4> allow{Ipv4{192, 168, 1, 11}, Ipv4{192, 168, 1, 13}, Ipv4{1, 2, 3, 4}};
  std::vector<PacketRecord> want;
  for (const auto& r : recs) {
    bool ok = false;
    for (const auto& a : allow) ok = ok || a == r.src_ip;
    if (ok) want.push_back(r);
  }
  auto got = filter_devices(recs, allow);
  CHECK(got.records == want);
  CHECK(got.dropped == recs.size() - want.size());
}

TEST_CASE("scaler moments recomputed in long double") {
  auto ds = extract_features(bursty(5000, 6));
  auto s = fit_scaler(ds.features);
  const auto z = apply_scaler(s, ds.features);
  const long double n = static_cast<long double>(ds.size());
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    long double sum = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) sum += ds.features(i, c);
    const long double mean = sum / n;
    long double var = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) var += (ds.features(i, c) - mean) * (ds.features(i, c) - mean);
    const long double sd = std::sqrt(var / n);
    CHECK(s.mean[c] == doctest::Approx(static_cast<double>(mean)).epsilon(1e-9));
    if (s.stddev[c] == 0) continue;
    CHECK(s.stddev[c] == doctest::Approx(static_cast<double>(sd)).epsilon(1e-9));
    long double zs = 0, zz = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      zs += z(i, c);
      zz += z(i, c) * z(i, c);
    }
    CHECK(static_cast<double>(zs / n) == doctest::Approx(0.0).epsilon(1e-9).scale(1));
    CHECK(static_cast<double>(zz / n) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

}
