#include "iotddos/eval.hpp"
#include "iotddos/features.hpp"

#include "../support/test_data.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

using namespace iotddos;

TEST_SUITE("properties") {

TEST_CASE("f1 is the harmonic mean and accuracy follows the confusion matrix") {
  Rng rng(81);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.index(200);
    const double p_attack = rng.uniform01();
    const double p_flip = rng.uniform01() * 0.5;
    std::vector<ClassLabel> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = rng.uniform01() < p_attack ? ClassLabel::Attack : ClassLabel::Normal;
      const bool flip = rng.uniform01() < p_flip;
      pred[i] = flip ? (truth[i] == ClassLabel::Attack ? ClassLabel::Normal : ClassLabel::Attack) : truth[i];
    }
    const auto m = metrics(truth, pred);
    const auto& c = m.confusion;
    REQUIRE(c.total() == n);
    CHECK(m.accuracy == doctest::Approx(static_cast<double>(c.tp + c.tn) / static_cast<double>(n)));
    for (const auto* cm : {&m.attack, &m.normal}) {
      if (!cm->f1_degenerate) {
        CHECK(cm->f1 == doctest::Approx(2 * cm->precision * cm->recall / (cm->precision + cm->recall)));
        CHECK(cm->f1 <= std::max(cm->precision, cm->recall) + 1e-12);
        CHECK(cm->f1 >= std::min(cm->precision, cm->recall) - 1e-12);
      } else {
        CHECK(cm->f1 == 0.0);
      }
    }
    if (c.tp + c.fp > 0) CHECK(m.attack.precision == doctest::Approx(double(c.tp) / double(c.tp + c.fp)));
    if (c.tn + c.fn > 0) CHECK(m.normal.precision == doctest::Approx(double(c.tn) / double(c.tn + c.fn)));
    if (c.tp + c.fn > 0) CHECK(m.attack.recall == doctest::Approx(double(c.tp) / double(c.tp + c.fn)));
    if (c.tn + c.fp > 0) CHECK(m.normal.recall == doctest::Approx(double(c.tn) / double(c.tn + c.fp)));
  }
}

TEST_CASE("one-hot protocol flags over simulated-like records") {
  auto ds = extract_features(testing::random_records(5000, 82, 3));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    int ones = 0;
    for (auto f : {Feature::IsTcp, Feature::IsUdp, Feature::IsHttp, Feature::IsOther}) {
      const double v = ds.features(i, idx(f));
      REQUIRE((v == 0.0 || v == 1.0));
      ones += v == 1.0 ? 1 : 0;
    }
    REQUIRE(ones == 1);
  }
}

TEST_CASE("feature join is a bijection between packets and rows") {
  auto recs = testing::random_records(8000, 83, 4);
  auto ds = extract_features(recs);
  REQUIRE(ds.size() == recs.size());
  std::set<std::pair<std::uint32_t, std::size_t>> seen;
  auto streams = split_by_device(recs);
  std::map<std::uint32_t, const DeviceStream*> by_ip;
  for (const auto& s : streams) by_ip[s.device_ip.value] = &s;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& p = ds.provenance[i];
    REQUIRE(seen.insert({p.device_ip.value, p.packet}).second);
    const auto& pkt = by_ip.at(p.device_ip.value)->packets.at(p.packet);
    CHECK(ds.features(i, idx(Feature::Size)) == pkt.size);
    CHECK(ds.labels[i] == *pkt.label);
  }
  for (std::size_t i = 1; i < ds.size(); ++i) {
    const auto& a = by_ip.at(ds.provenance[i - 1].device_ip.value)->packets[ds.provenance[i - 1].packet];
    const auto& b = by_ip.at(ds.provenance[i].device_ip.value)->packets[ds.provenance[i].packet];
    CHECK(a.ts_us <= b.ts_us);
  }
}

TEST_CASE("time shift leaves every feature row unchanged") {
  for (std::int64_t shift : {1LL, 999'999LL, 3'600'000'000LL}) {
    auto recs = testing::random_records(3000, 84, 3);
    auto moved = recs;
    for (auto& r : moved) r.ts_us += shift;
    CHECK(extract_features(recs).features == extract_features(moved).features);
  }
}

TEST_CASE("window width partitions the same packets") {
  auto recs = testing::random_records(4000, 85, 2);
  for (double w : {0.5, 5.0, 60.0}) {
    auto ds = extract_features(recs, w);
    CHECK(ds.size() == recs.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(ds.features(i, idx(Feature::DestCount)) >= 1.0);
      CHECK(ds.features(i, idx(Feature::Bandwidth)) >= ds.features(i, idx(Feature::Size)) / w - 1e-9);
    }
  }
}

}
