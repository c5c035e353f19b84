#include "iotddos/error.hpp"
#include "iotddos/packet.hpp"
#include "iotddos/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <vector>

using namespace iotddos;

TEST_SUITE("packet") {

TEST_CASE("ipv4 parses dotted quads and rejects junk") {
  CHECK(Ipv4::parse("192.168.1.10") == Ipv4{192, 168, 1, 10});
  CHECK(Ipv4::parse("0.0.0.0").value == 0u);
  CHECK(Ipv4::parse("255.255.255.255").value == 0xffffffffu);
  CHECK(Ipv4{10, 0, 0, 1}.to_string() == "10.0.0.1");
  for (auto bad : {"", "1.2.3", "1.2.3.4.5", "256.1.1.1", "1..2.3", "a.b.c.d", "1.2.3.4 ", "0001.2.3.4"}) {
    CAPTURE(bad);
    CHECK_FALSE(Ipv4::try_parse(bad).has_value());
  }
  CHECK_THROWS_AS(Ipv4::parse("1.2.3"), Error);
}

TEST_CASE("ipv4 text round-trips") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    Ipv4 ip{static_cast<std::uint32_t>(rng.next_u64())};
    CHECK(Ipv4::parse(ip.to_string()) == ip);
  }
}

TEST_CASE("protocol classification") {
  CHECK(classify_protocol(kIpProtoTcp, 5000, 443) == ProtocolClass::Tcp);
  CHECK(classify_protocol(kIpProtoTcp, 5000, 80) == ProtocolClass::Http);
  CHECK(classify_protocol(kIpProtoTcp, 8080, 5000) == ProtocolClass::Http);
  CHECK(classify_protocol(kIpProtoTcp, 80, 8080) == ProtocolClass::Http);
  CHECK(classify_protocol(kIpProtoUdp, 5000, 80) == ProtocolClass::Udp);
  CHECK(classify_protocol(kIpProtoUdp, 53, 53) == ProtocolClass::Udp);
  CHECK(classify_protocol(kIpProtoIcmp, 0, 0) == ProtocolClass::Other);
  CHECK(classify_protocol(47, 0, 0) == ProtocolClass::Other);
}

TEST_CASE("protocol and label names round-trip") {
  for (auto p : {ProtocolClass::Tcp, ProtocolClass::Udp, ProtocolClass::Http, ProtocolClass::Other}) {
    CHECK(protocol_from_string(to_string(p)) == p);
  }
  for (auto l : {ClassLabel::Normal, ClassLabel::Attack}) CHECK(label_from_string(to_string(l)) == l);
  CHECK_FALSE(protocol_from_string("icmp6").has_value());
  CHECK_FALSE(label_from_string("benign?").has_value());
}

TEST_CASE("transport number for each class") {
  CHECK(ip_protocol_number(ProtocolClass::Tcp) == kIpProtoTcp);
  CHECK(ip_protocol_number(ProtocolClass::Http) == kIpProtoTcp);
  CHECK(ip_protocol_number(ProtocolClass::Udp) == kIpProtoUdp);
  CHECK(ip_protocol_number(ProtocolClass::Other) == kIpProtoIcmp);
}

TEST_CASE("seconds conversion rounds to the nearest microsecond") {
  CHECK(seconds_to_us(1.5) == 1'500'000);
  CHECK(seconds_to_us(0.0000004) == 0);
  CHECK(seconds_to_us(0.0000006) == 1);
  CHECK(seconds_to_us(-2.0) == -2'000'000);
  PacketRecord r;
  r.ts_us = 2'500'000;
  CHECK(r.seconds() == doctest::Approx(2.5));
}

TEST_CASE("validate_stream accepts a clean stream") {
  DeviceStream s{Ipv4{10, 0, 0, 1}, {}};
  for (int i = 0; i < 5; ++i) {
    PacketRecord r;
    r.ts_us = i * 1000;
    r.src_ip = s.device_ip;
    r.src_port = 1234;
    r.dst_port = 443;
    r.proto = ProtocolClass::Tcp;
    r.size = 60;
    s.packets.push_back(r);
  }
  s.packets[2].ts_us = s.packets[1].ts_us;
  CHECK(validate_stream(s).empty());
}

TEST_CASE("validate_stream reports each violation kind") {
  const Ipv4 dev{10, 0, 0, 1};
  auto base = [&](std::int64_t ts) {
    PacketRecord r;
    r.ts_us = ts;
    r.src_ip = dev;
    r.src_port = 1;
    r.dst_port = 2;
    r.proto = ProtocolClass::Udp;
    r.size = 100;
    return r;
  };
  DeviceStream s{dev, {base(10), base(5), base(20), base(30), base(40)}};
  s.packets[2].src_ip = Ipv4{10, 0, 0, 2};
  s.packets[3].size = 0;
  s.packets[4].dst_port = 0;
  auto v = validate_stream(s);
  auto has = [&](std::size_t i, ViolationKind k) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.index == i && x.kind == k; });
  };
  CHECK(has(1, ViolationKind::UnsortedTimestamp));
  CHECK(has(2, ViolationKind::ForeignSource));
  CHECK(has(3, ViolationKind::ZeroSize));
  CHECK(has(4, ViolationKind::ZeroPortTransport));
  CHECK(v.size() == 4);

  DeviceStream neg{dev, {base(-1)}};
  v = validate_stream(neg);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::NegativeTimestamp);

  DeviceStream icmp{dev, {base(0)}};
  icmp.packets[0].proto = ProtocolClass::Other;
  icmp.packets[0].src_port = icmp.packets[0].dst_port = 0;
  CHECK(validate_stream(icmp).empty());
}

TEST_CASE("error carries code and offset") {
  Error e(Errc::TruncatedRecord, "short", 42);
  CHECK(e.code() == Errc::TruncatedRecord);
  REQUIRE(e.offset().has_value());
  CHECK(*e.offset() == 42u);
  CHECK(std::string(e.what()).find("short") != std::string::npos);
  CHECK(to_string(Errc::UnsortedInput) != to_string(Errc::MissingLabel));
}

}
