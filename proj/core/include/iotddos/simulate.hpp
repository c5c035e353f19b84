#pragma once

#include "iotddos/packet.hpp"
#include "iotddos/rng.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace iotddos {

struct SizeRange {
  std::uint32_t min = 60;
  std::uint32_t max = 60;
};

struct Endpoint {
  Ipv4 ip;
  std::uint16_t port = 0;
};

enum class BehaviorKind { Keepalive, Stream, BurstUpdate };

// One recurring traffic pattern of a device.
//  Keepalive:   one packet every `period` seconds, +/-10% jitter.
//  Stream:      Poisson arrivals at `rate` packets/s.
//  BurstUpdate: every `period` seconds (+/-10%), a `burst` second run of
//               Poisson arrivals at `rate` packets/s.
struct Behavior {
  BehaviorKind kind = BehaviorKind::Keepalive;
  double period = 1.0;
  double rate = 0.0;
  double burst = 0.0;
  SizeRange size;
  ProtocolClass proto = ProtocolClass::Udp;
  std::uint16_t src_port = 0; // 0: pick an ephemeral port per behavior
  std::vector<Endpoint> endpoints;
};

inline constexpr std::size_t kMaxEndpointsPerDevice = 8;

struct DeviceProfile {
  Ipv4 device_ip;
  std::vector<Behavior> behaviors;
};

enum class AttackKind { SynFlood, UdpFlood, HttpGetFlood };
inline constexpr std::array<AttackKind, 3> kAttackKinds{AttackKind::SynFlood, AttackKind::UdpFlood,
                                                         AttackKind::HttpGetFlood};

std::string_view to_string(AttackKind k) noexcept;

struct AttackSpec {
  AttackKind kind = AttackKind::SynFlood;
  Ipv4 victim_ip;
  std::uint16_t victim_port = 443;
  double rate = 1000.0;    // packets/s
  double duration = 100.0; // seconds
  SizeRange size{54, 74};
};

SizeRange default_attack_size(AttackKind k) noexcept;

struct AttackClassConfig {
  double rate = 0.0;
  std::uint16_t port = 0;
  SizeRange size;
};

struct AttackConfig {
  bool enabled = true;
  Ipv4 victim_ip{192, 168, 1, 50};
  double min_duration = 90.0;
  double max_duration = 110.0;
  AttackClassConfig syn_flood{470.0, 443, {54, 74}};
  AttackClassConfig udp_flood{400.0, 9999, {60, 90}};
  AttackClassConfig http_get_flood{300.0, 80, {60, 120}};

  const AttackClassConfig& for_kind(AttackKind k) const noexcept;
};

struct ScenarioConfig {
  std::uint64_t seed = 42;
  double capture_length = 600.0;
  std::vector<DeviceProfile> devices;
  AttackConfig attacks;
};

// Three devices modeled on a streaming camera, a smart switch and a health
// monitor bridged through a phone.
std::vector<DeviceProfile> default_device_profiles();
ScenarioConfig default_scenario(std::uint64_t seed = 42);

// Throws InvalidConfig when a profile breaks its invariants.
void validate_profile(const DeviceProfile& profile);

std::vector<PacketRecord> gen_benign(const DeviceProfile& profile, double length, Rng& rng);

// Packets carry src_ip 0.0.0.0; overlay_scenario rewrites it to the device.
std::vector<PacketRecord> gen_attack(const AttackSpec& spec, double start, Rng& rng);

struct ScheduledAttack {
  Ipv4 device_ip;
  AttackKind kind{};
  double start = 0.0;
  double duration = 0.0;
  std::size_t packets = 0;

  double end() const noexcept { return start + duration; }
};

struct Scenario {
  std::vector<PacketRecord> packets; // sorted by timestamp, first at t = 0
  std::vector<ScheduledAttack> schedule;
};

Scenario overlay_scenario(const ScenarioConfig& config);

ScenarioConfig scenario_from_json(std::string_view json_text);
std::string scenario_to_json(const ScenarioConfig& config);

} // namespace iotddos
