#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iotddos {

struct Ipv4 {
  std::uint32_t value = 0;

  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t v) : value(v) {}
  constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

  // Dotted quad. Throws Error{InvalidConfig} on malformed text.
  static Ipv4 parse(std::string_view text);
  static std::optional<Ipv4> try_parse(std::string_view text) noexcept;
  std::string to_string() const;

  friend constexpr auto operator<=>(Ipv4, Ipv4) = default;
};

enum class ProtocolClass : std::uint8_t { Tcp, Udp, Http, Other };
enum class ClassLabel : std::uint8_t { Normal, Attack };

inline constexpr std::uint8_t kIpProtoTcp = 6;
inline constexpr std::uint8_t kIpProtoUdp = 17;
inline constexpr std::uint8_t kIpProtoIcmp = 1;

std::string_view to_string(ProtocolClass p) noexcept;
std::optional<ProtocolClass> protocol_from_string(std::string_view s) noexcept;
std::string_view to_string(ClassLabel l) noexcept;
std::optional<ClassLabel> label_from_string(std::string_view s) noexcept;

// HTTP iff TCP with either port in {80, 8080}. HTTP wins over TCP so the
// four protocol flags stay one-hot.
ProtocolClass classify_protocol(std::uint8_t proto_number, std::uint16_t src_port,
                                std::uint16_t dst_port) noexcept;

// Transport the class is carried on when synthesizing headers.
std::uint8_t ip_protocol_number(ProtocolClass p) noexcept;

struct PacketRecord {
  std::int64_t ts_us = 0; // microseconds since capture start
  Ipv4 src_ip;
  std::uint16_t src_port = 0;
  Ipv4 dst_ip;
  std::uint16_t dst_port = 0;
  ProtocolClass proto = ProtocolClass::Other;
  std::uint32_t size = 0; // original frame length
  std::optional<ClassLabel> label;

  double seconds() const noexcept { return static_cast<double>(ts_us) * 1e-6; }

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

inline std::int64_t seconds_to_us(double s) noexcept {
  return static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5));
}

struct DeviceStream {
  Ipv4 device_ip;
  std::vector<PacketRecord> packets;
};

// Half-open interval [start, start + width) over one device stream.
struct TimeWindow {
  Ipv4 device_ip;
  std::size_t index = 0;
  double start = 0.0;
  double width = 10.0;
  std::span<const PacketRecord> packets;
};

enum class ViolationKind { UnsortedTimestamp, ForeignSource, ZeroSize, NegativeTimestamp, ZeroPortTransport };

struct Violation {
  std::size_t index = 0;
  ViolationKind kind{};
};

std::string_view to_string(ViolationKind k) noexcept;

// Empty result means the stream is valid.
std::vector<Violation> validate_stream(const DeviceStream& stream);

} // namespace iotddos
