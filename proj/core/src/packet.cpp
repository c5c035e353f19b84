#include "iotddos/packet.hpp"

#include "iotddos/error.hpp"

#include <charconv>

namespace iotddos {

std::optional<Ipv4> Ipv4::try_parse(std::string_view text) noexcept {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
    unsigned v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || next == p || v > 255 || next - p > 3) return std::nullopt;
    value = (value << 8) | v;
    p = next;
  }
  if (p != end) return std::nullopt;
  return Ipv4{value};
}

Ipv4 Ipv4::parse(std::string_view text) {
  if (auto ip = try_parse(text)) return *ip;
  throw Error(Errc::InvalidConfig, "bad IPv4 address '" + std::string(text) + "'");
}

std::string Ipv4::to_string() const {
  std::string out;
  out.reserve(15);
  for (int shift = 24; shift >= 0; shift -= 8) {
    out += std::to_string((value >> shift) & 0xffu);
    if (shift) out += '.';
  }
  return out;
}

std::string_view to_string(ProtocolClass p) noexcept {
  switch (p) {
  case ProtocolClass::Tcp: return "TCP";
  case ProtocolClass::Udp: return "UDP";
  case ProtocolClass::Http: return "HTTP";
  case ProtocolClass::Other: return "OTHER";
  }
  return "OTHER";
}

std::optional<ProtocolClass> protocol_from_string(std::string_view s) noexcept {
  if (s == "TCP") return ProtocolClass::Tcp;
  if (s == "UDP") return ProtocolClass::Udp;
  if (s == "HTTP") return ProtocolClass::Http;
  if (s == "OTHER") return ProtocolClass::Other;
  return std::nullopt;
}

std::string_view to_string(ClassLabel l) noexcept {
  return l == ClassLabel::Attack ? "attack" : "normal";
}

std::optional<ClassLabel> label_from_string(std::string_view s) noexcept {
  if (s == "attack" || s == "1") return ClassLabel::Attack;
  if (s == "normal" || s == "0") return ClassLabel::Normal;
  return std::nullopt;
}

ProtocolClass classify_protocol(std::uint8_t proto_number, std::uint16_t src_port,
                                std::uint16_t dst_port) noexcept {
  auto is_web = [](std::uint16_t port) { return port == 80 || port == 8080; };
  if (proto_number == kIpProtoTcp) {
    return (is_web(src_port) || is_web(dst_port)) ? ProtocolClass::Http : ProtocolClass::Tcp;
  }
  if (proto_number == kIpProtoUdp) return ProtocolClass::Udp;
  return ProtocolClass::Other;
}

std::uint8_t ip_protocol_number(ProtocolClass p) noexcept {
  switch (p) {
  case ProtocolClass::Tcp:
  case ProtocolClass::Http: return kIpProtoTcp;
  case ProtocolClass::Udp: return kIpProtoUdp;
  case ProtocolClass::Other: return kIpProtoIcmp;
  }
  return kIpProtoIcmp;
}

std::string_view to_string(ViolationKind k) noexcept {
  switch (k) {
  case ViolationKind::UnsortedTimestamp: return "unsorted timestamp";
  case ViolationKind::ForeignSource: return "foreign source address";
  case ViolationKind::ZeroSize: return "zero size";
  case ViolationKind::NegativeTimestamp: return "negative timestamp";
  case ViolationKind::ZeroPortTransport: return "zero port on TCP/UDP packet";
  }
  return "unknown";
}

std::vector<Violation> validate_stream(const DeviceStream& stream) {
  std::vector<Violation> out;
  const auto& pkts = stream.packets;
  for (std::size_t i = 0; i < pkts.size(); ++i) {
    const auto& p = pkts[i];
    if (p.src_ip != stream.device_ip) out.push_back({i, ViolationKind::ForeignSource});
    if (i > 0 && p.ts_us < pkts[i - 1].ts_us) out.push_back({i, ViolationKind::UnsortedTimestamp});
    if (p.ts_us < 0) out.push_back({i, ViolationKind::NegativeTimestamp});
    if (p.size == 0) out.push_back({i, ViolationKind::ZeroSize});
    if (p.proto != ProtocolClass::Other && (p.src_port == 0 || p.dst_port == 0))
      out.push_back({i, ViolationKind::ZeroPortTransport});
  }
  return out;
}

} // namespace iotddos
