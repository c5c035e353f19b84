#include "iotddos/error.hpp"
#include "iotddos/eval.hpp"
#include "iotddos/ingest.hpp"
#include "iotddos/model.hpp"
#include "iotddos/report.hpp"

#include "../support/test_data.hpp"

#include <doctest.h>

#include <filesystem>
#include <vector>

using namespace iotddos;

namespace {

// Minimal pcap writer independent of encode_pcap, either byte order.
struct PcapBuilder {
  bool big_endian = false;
  std::vector<std::byte> bytes;

  void u8(unsigned v) { bytes.push_back(static_cast<std::byte>(v & 0xff)); }
  void be16(unsigned v) {
    u8(v >> 8);
    u8(v);
  }
  void be32(std::uint32_t v) {
    be16(v >> 16);
    be16(v & 0xffff);
  }
  void h16(unsigned v) { big_endian ? be16(v) : (u8(v), u8(v >> 8)); }
  void h32(std::uint32_t v) {
    if (big_endian) {
      be32(v);
    } else {
      for (int s = 0; s < 32; s += 8) u8(v >> s);
    }
  }

  explicit PcapBuilder(bool be) : big_endian(be) {
    h32(0xa1b2c3d4);
    h16(2);
    h16(4);
    h32(0);
    h32(0);
    h32(65535);
    h32(1);
  }

  void frame(std::uint32_t sec, std::uint32_t usec, std::uint32_t orig, unsigned ethertype, unsigned proto,
             std::uint32_t src, std::uint32_t dst, unsigned sport, unsigned dport, unsigned ihl_words = 5) {
    std::vector<std::byte> f;
    std::swap(f, bytes);
    for (int i = 0; i < 12; ++i) u8(0x11);
    be16(ethertype);
    u8(0x40 | ihl_words);
    u8(0);
    be16(orig - 14);
    be16(1);
    be16(0);
    u8(64);
    u8(proto);
    be16(0);
    be32(src);
    be32(dst);
    for (unsigned i = 5; i < ihl_words; ++i) be32(0);
    if (proto == 6 || proto == 17) {
      be16(sport);
      be16(dport);
      for (int i = 0; i < 4; ++i) u8(0);
    }
    std::swap(f, bytes);
    h32(sec);
    h32(usec);
    h32(static_cast<std::uint32_t>(f.size()));
    h32(orig);
    bytes.insert(bytes.end(), f.begin(), f.end());
  }
};

void pcap_round_trip(std::size_t n, std::uint64_t seed) {
  auto recs = testing::random_records(n, seed, 5);
  auto res = parse_pcap(encode_pcap(recs));
  REQUIRE(res.records.size() == n);
  CHECK(res.skipped == 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = recs[i];
    const auto& b = res.records[i];
    REQUIRE(a.ts_us == b.ts_us);
    REQUIRE(a.src_ip == b.src_ip);
    REQUIRE(a.dst_ip == b.dst_ip);
    REQUIRE(a.src_port == b.src_port);
    REQUIRE(a.dst_port == b.dst_port);
    REQUIRE(a.proto == b.proto);
    REQUIRE(a.size == b.size);
  }
}

LabeledDataset toy_dataset(std::size_t n, std::uint64_t seed) {
  auto d = testing::toy_data(n, kFeatureCount, seed, 0.05);
  LabeledDataset ds;
  ds.features = std::move(d.X);
  ds.labels = std::move(d.y);
  ds.provenance.resize(n);
  return ds;
}

} // namespace

TEST_SUITE("oracle.roundtrip") {

TEST_CASE("parser decodes hand-built frames in both byte orders") {
  for (bool be : {false, true}) {
    CAPTURE(be);
    PcapBuilder b(be);
    b.frame(100, 5, 60, 0x0800, 6, 0xc0a8010a, 0x08080808, 40000, 443);
    b.frame(100, 900000, 1400, 0x0800, 17, 0xc0a8010a, 0x01010101, 5353, 80);
    b.frame(101, 0, 74, 0x0800, 6, 0xc0a80114, 0xc0a80132, 8080, 50000, 6);
    b.frame(101, 1, 98, 0x0800, 1, 0xc0a8011e, 0xc0a80101, 0, 0);
    b.frame(102, 0, 60, 0x86dd, 6, 0, 0, 1, 2);
    auto res = parse_pcap(b.bytes);
    CHECK(res.frames == 5);
    CHECK(res.skipped == 1);
    REQUIRE(res.records.size() == 4);
    const auto& r = res.records;
    CHECK(r[0].ts_us == 0);
    CHECK(r[1].ts_us == 899995);
    CHECK(r[3].ts_us == 999996);
    CHECK(r[0].proto == ProtocolClass::Tcp);
    CHECK(r[0].src_ip == Ipv4{192, 168, 1, 10});
    CHECK(r[0].dst_port == 443);
    CHECK(r[0].size == 60);
    CHECK(r[1].proto == ProtocolClass::Udp);
    CHECK(r[1].size == 1400);
    CHECK(r[2].proto == ProtocolClass::Http);
    CHECK(r[2].src_port == 8080);
    CHECK(r[3].proto == ProtocolClass::Other);
    CHECK(r[3].src_port == 0);
    CHECK(r[3].dst_ip == Ipv4{192, 168, 1, 1});
  }
}

TEST_CASE("pcap write/read is the identity on modeled fields for 1,000 packets") { pcap_round_trip(1000, 71); }

TEST_CASE("pcap write/read is the identity on modeled fields for 10,000 packets") { pcap_round_trip(10000, 72); }

TEST_CASE("csv write/read is the identity for 10,000 packets") {
  auto recs = testing::random_records(10000, 73, 5);
  CHECK(parse_packet_csv(encode_packet_csv(recs)).records == recs);
}

TEST_CASE("model serialization preserves predictions for every kind") {
  auto ds = toy_dataset(1200, 74);
  auto test = toy_dataset(300, 75);
  Hyperparameters hp;
  hp.nn.epochs = 5;
  for (auto kind : kModelKinds) {
    CAPTURE(display_name(kind));
    for (auto mode : {FeatureMode::All, FeatureMode::Stateless}) {
      const auto X = ds.view(mode);
      auto m = fit(kind, X, ds.labels, hp, 3);
      const auto rows = test.view(mode);
      const auto want = m.predict_scores(rows);
      auto from_json = model_from_json(model_to_json(m));
      auto from_cbor = model_from_cbor(model_to_cbor(m));
      CHECK(from_json.predict_scores(rows) == want);
      CHECK(from_cbor.predict_scores(rows) == want);
      CHECK(model_to_json(from_json) == model_to_json(m));
      CHECK(from_cbor.arity() == m.arity());
    }
  }
}

TEST_CASE("model files on disk") {
  auto ds = toy_dataset(500, 76);
  auto m = fit(ModelKind::RF, ds.features, ds.labels, Hyperparameters{}, 1);
  const auto dir = std::filesystem::temp_directory_path();
  for (auto name : {"iotddos_rt.json", "iotddos_rt.cbor"}) {
    save_model(m, dir / name);
    CHECK(model_to_json(load_model(dir / name)) == model_to_json(m));
    std::filesystem::remove(dir / name);
  }
  CHECK_THROWS_AS(model_from_json("{\"format\": \"something else\"}"), Error);
  CHECK_THROWS_AS(model_from_json("not json"), Error);
}

TEST_CASE("report json round-trip") {
  auto ds = toy_dataset(1000, 77);
  Hyperparameters hp;
  hp.nn.epochs = 3;
  EvalOptions o;
  o.config_digest = "0123456789abcdef";
  auto r = evaluate(ds, hp, 9, o);
  const auto text = emit_report(r, ReportFormat::Json);
  const auto back = report_from_json(text);
  CHECK(back == r);
  CHECK(emit_report(back, ReportFormat::Json) == text);
}

}
