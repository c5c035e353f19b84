#include "iotddos/simulate.hpp"

#include "iotddos/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace iotddos {

using nlohmann::json;

namespace {

constexpr std::uint64_t kStreamSchedule = 1000;
constexpr std::uint64_t kStreamBenign = 2000;
constexpr std::uint64_t kStreamAttack = 3000;

Endpoint ep(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d, std::uint16_t port) {
  return Endpoint{Ipv4{a, b, c, d}, port};
}

Behavior keepalive(double period, SizeRange size, ProtocolClass proto, std::vector<Endpoint> eps) {
  Behavior b;
  b.kind = BehaviorKind::Keepalive;
  b.period = period;
  b.size = size;
  b.proto = proto;
  b.endpoints = std::move(eps);
  return b;
}

Behavior stream(double rate, SizeRange size, ProtocolClass proto, std::vector<Endpoint> eps) {
  Behavior b;
  b.kind = BehaviorKind::Stream;
  b.rate = rate;
  b.size = size;
  b.proto = proto;
  b.endpoints = std::move(eps);
  return b;
}

Behavior burst_update(double period, double burst, double rate, SizeRange size, ProtocolClass proto,
                      std::vector<Endpoint> eps) {
  Behavior b;
  b.kind = BehaviorKind::BurstUpdate;
  b.period = period;
  b.burst = burst;
  b.rate = rate;
  b.size = size;
  b.proto = proto;
  b.endpoints = std::move(eps);
  return b;
}

std::uint16_t ephemeral_port(Rng& rng) { return static_cast<std::uint16_t>(rng.uniform_int(32768, 60999)); }

std::uint32_t draw_size(const SizeRange& r, Rng& rng) {
  return static_cast<std::uint32_t>(rng.uniform_int(r.min, r.max));
}

void emit(std::vector<PacketRecord>& out, double t, Ipv4 src, std::uint16_t sport, const Endpoint& dst,
          ProtocolClass transport, std::uint32_t size, ClassLabel label) {
  PacketRecord r;
  r.ts_us = seconds_to_us(t);
  r.src_ip = src;
  r.dst_ip = dst.ip;
  if (transport == ProtocolClass::Other) {
    r.proto = ProtocolClass::Other;
  } else {
    r.src_port = sport;
    r.dst_port = dst.port;
    r.proto = classify_protocol(ip_protocol_number(transport), sport, dst.port);
  }
  r.size = size;
  r.label = label;
  out.push_back(r);
}

std::string_view to_string(BehaviorKind k) {
  switch (k) {
  case BehaviorKind::Keepalive: return "keepalive";
  case BehaviorKind::Stream: return "stream";
  case BehaviorKind::BurstUpdate: return "burst_update";
  }
  return "keepalive";
}

BehaviorKind behavior_from_string(const std::string& s) {
  if (s == "keepalive") return BehaviorKind::Keepalive;
  if (s == "stream") return BehaviorKind::Stream;
  if (s == "burst_update") return BehaviorKind::BurstUpdate;
  throw Error(Errc::InvalidConfig, "unknown behavior kind '" + s + "'");
}

json size_to_json(const SizeRange& r) { return json::array({r.min, r.max}); }

SizeRange size_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(Errc::InvalidConfig, "size must be [min, max]");
  SizeRange r{j[0].get<std::uint32_t>(), j[1].get<std::uint32_t>()};
  if (r.min == 0 || r.min > r.max) throw Error(Errc::InvalidConfig, "size range must satisfy 1 <= min <= max");
  return r;
}

std::string endpoint_to_string(const Endpoint& e) { return e.ip.to_string() + ":" + std::to_string(e.port); }

Endpoint endpoint_from_string(const std::string& s) {
  auto colon = s.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::InvalidConfig, "endpoint must be ip:port, got '" + s + "'");
  Endpoint e;
  e.ip = Ipv4::parse(std::string_view(s).substr(0, colon));
  int port = std::stoi(s.substr(colon + 1));
  if (port < 0 || port > 65535) throw Error(Errc::InvalidConfig, "port out of range in '" + s + "'");
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

json attack_class_to_json(const AttackClassConfig& c) {
  return json{{"rate", c.rate}, {"port", c.port}, {"size", size_to_json(c.size)}};
}

void attack_class_from_json(const json& j, AttackClassConfig& c) {
  if (j.contains("rate")) c.rate = j.at("rate").get<double>();
  if (j.contains("port")) c.port = j.at("port").get<std::uint16_t>();
  if (j.contains("size")) c.size = size_from_json(j.at("size"));
}

void validate_attacks(const AttackConfig& a) {
  if (a.min_duration <= 0 || a.min_duration > a.max_duration) {
    throw Error(Errc::InvalidConfig, "attack durations must satisfy 0 < min <= max");
  }
  for (auto kind : kAttackKinds) {
    const auto& c = a.for_kind(kind);
    if (!(c.rate > 0)) throw Error(Errc::InvalidConfig, std::string(to_string(kind)) + " rate must be positive");
    if (c.port == 0) throw Error(Errc::InvalidConfig, std::string(to_string(kind)) + " port must be non-zero");
  }
  const bool syn_web = a.syn_flood.port == 80 || a.syn_flood.port == 8080;
  const bool http_web = a.http_get_flood.port == 80 || a.http_get_flood.port == 8080;
  if (syn_web) throw Error(Errc::InvalidConfig, "SYN flood port would classify as HTTP");
  if (!http_web) throw Error(Errc::InvalidConfig, "HTTP GET flood port must be 80 or 8080");
}

} // namespace

std::string_view to_string(AttackKind k) noexcept {
  switch (k) {
  case AttackKind::SynFlood: return "syn_flood";
  case AttackKind::UdpFlood: return "udp_flood";
  case AttackKind::HttpGetFlood: return "http_get_flood";
  }
  return "syn_flood";
}

SizeRange default_attack_size(AttackKind k) noexcept {
  switch (k) {
  case AttackKind::SynFlood: return {54, 74};
  case AttackKind::UdpFlood: return {60, 90};
  case AttackKind::HttpGetFlood: return {60, 120};
  }
  return {54, 74};
}

const AttackClassConfig& AttackConfig::for_kind(AttackKind k) const noexcept {
  switch (k) {
  case AttackKind::SynFlood: return syn_flood;
  case AttackKind::UdpFlood: return udp_flood;
  case AttackKind::HttpGetFlood: return http_get_flood;
  }
  return syn_flood;
}

std::vector<DeviceProfile> default_device_profiles() {
  using P = ProtocolClass;
  std::vector<DeviceProfile> devices;

  DeviceProfile camera;
  camera.device_ip = Ipv4{192, 168, 1, 10};
  camera.behaviors = {
      stream(24.0, {1000, 1200}, P::Udp, {ep(52, 8, 10, 20, 10001), ep(52, 8, 10, 21, 10001)}),
      stream(5.0, {100, 1200}, P::Tcp, {ep(54, 1, 1, 5, 443)}),
      keepalive(1.0, {130, 190}, P::Udp, {ep(52, 8, 10, 20, 32100)}),
      keepalive(10.0, {80, 150}, P::Tcp, {ep(54, 1, 1, 5, 443)}),
      keepalive(30.0, {150, 190}, P::Tcp, {ep(54, 1, 1, 5, 80)}),
      keepalive(1.0, {64, 98}, P::Other, {ep(192, 168, 1, 1, 0)}),
      burst_update(200.0, 0.25, 1000.0, {60, 66}, P::Tcp,
                   {ep(54, 1, 2, 9, 443), ep(54, 1, 2, 10, 443), ep(54, 1, 2, 11, 443), ep(54, 1, 2, 12, 443)}),
      stream(6.0, {100, 120}, P::Udp, {ep(52, 8, 10, 20, 10002)}),
  };
  devices.push_back(std::move(camera));

  DeviceProfile plug;
  plug.device_ip = Ipv4{192, 168, 1, 20};
  plug.behaviors = {
      stream(1.0, {130, 400}, P::Udp, {ep(192, 168, 1, 1, 53), ep(239, 255, 255, 250, 1900)}),
      keepalive(10.0, {130, 190}, P::Tcp, {ep(52, 20, 1, 1, 8443), ep(52, 20, 1, 2, 8443)}),
      keepalive(2.0, {64, 98}, P::Other, {ep(192, 168, 1, 1, 0)}),
  };
  devices.push_back(std::move(plug));

  DeviceProfile monitor;
  monitor.device_ip = Ipv4{192, 168, 1, 30};
  monitor.behaviors = {
      stream(1.0, {130, 600}, P::Udp, {ep(34, 1, 2, 4, 5683), ep(192, 168, 1, 1, 53)}),
      keepalive(15.0, {130, 190}, P::Tcp, {ep(34, 1, 2, 3, 443)}),
      burst_update(60.0, 3.0, 20.0, {200, 1200}, P::Tcp, {ep(34, 1, 2, 3, 443)}),
      keepalive(2.0, {64, 98}, P::Other, {ep(192, 168, 1, 1, 0)}),
  };
  devices.push_back(std::move(monitor));
  return devices;
}

ScenarioConfig default_scenario(std::uint64_t seed) {
  ScenarioConfig c;
  c.seed = seed;
  c.devices = default_device_profiles();
  return c;
}

void validate_profile(const DeviceProfile& profile) {
  std::set<std::pair<std::uint32_t, std::uint16_t>> endpoints;
  std::set<std::uint32_t> dst_ips;
  const std::string who = "device " + profile.device_ip.to_string();
  for (const auto& b : profile.behaviors) {
    if (b.endpoints.empty()) throw Error(Errc::InvalidConfig, who + ": behavior without endpoints");
    for (const auto& e : b.endpoints) {
      endpoints.insert({e.ip.value, e.port});
      dst_ips.insert(e.ip.value);
      if (b.proto != ProtocolClass::Other && e.port == 0) {
        throw Error(Errc::InvalidConfig, who + ": TCP/UDP endpoint with port 0");
      }
    }
    if (b.size.min == 0 || b.size.min > b.size.max) throw Error(Errc::InvalidConfig, who + ": bad size range");
    switch (b.kind) {
    case BehaviorKind::Keepalive:
      if (!(b.period > 0)) throw Error(Errc::InvalidConfig, who + ": keepalive period must be positive");
      if (b.size.max >= 200) throw Error(Errc::InvalidConfig, who + ": keepalive packets must be under 200 B");
      break;
    case BehaviorKind::Stream:
      if (!(b.rate > 0)) throw Error(Errc::InvalidConfig, who + ": stream rate must be positive");
      if (b.size.min < 100 || b.size.max > 1200) {
        throw Error(Errc::InvalidConfig, who + ": stream sizes must lie in [100, 1200] B");
      }
      break;
    case BehaviorKind::BurstUpdate:
      if (!(b.period > 0) || !(b.rate > 0) || !(b.burst > 0) || b.burst > b.period) {
        throw Error(Errc::InvalidConfig, who + ": burst update needs 0 < burst <= period and rate > 0");
      }
      break;
    }
  }
  if (dst_ips.size() > kMaxEndpointsPerDevice) {
    throw Error(Errc::InvalidConfig, who + ": more than 8 distinct endpoints");
  }
}

std::vector<PacketRecord> gen_benign(const DeviceProfile& profile, double length, Rng& rng) {
  if (!(length > 0)) throw Error(Errc::InvalidConfig, "benign length must be positive");
  validate_profile(profile);
  std::vector<PacketRecord> out;
  for (const auto& b : profile.behaviors) {
    const std::uint16_t sport = b.src_port != 0 ? b.src_port : ephemeral_port(rng);
    auto send = [&](double t) {
      const Endpoint& dst = b.endpoints[rng.index(b.endpoints.size())];
      emit(out, t, profile.device_ip, sport, dst, b.proto, draw_size(b.size, rng), ClassLabel::Normal);
    };
    switch (b.kind) {
    case BehaviorKind::Keepalive:
      for (double t = rng.uniform(0.0, b.period); t < length; t += b.period * rng.uniform(0.9, 1.1)) send(t);
      break;
    case BehaviorKind::Stream:
      for (double t = rng.exponential(b.rate); t < length; t += rng.exponential(b.rate)) send(t);
      break;
    case BehaviorKind::BurstUpdate:
      for (double start = rng.uniform(0.0, b.period); start < length; start += b.period * rng.uniform(0.9, 1.1)) {
        const double stop = std::min(start + b.burst, length);
        for (double t = start; t < stop; t += rng.exponential(b.rate)) send(t);
      }
      break;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.ts_us < b.ts_us; });
  return out;
}

std::vector<PacketRecord> gen_attack(const AttackSpec& spec, double start, Rng& rng) {
  if (!(spec.rate > 0) || !(spec.duration > 0) || spec.rate * spec.duration < 1.0) {
    throw Error(Errc::InvalidConfig, "attack needs rate * duration >= 1");
  }
  ProtocolClass transport = spec.kind == AttackKind::UdpFlood ? ProtocolClass::Udp : ProtocolClass::Tcp;
  const Endpoint victim{spec.victim_ip, spec.victim_port};
  std::vector<PacketRecord> out;
  out.reserve(static_cast<std::size_t>(spec.rate * spec.duration * 1.05) + 16);
  const double stop = start + spec.duration;
  for (double t = start + rng.exponential(spec.rate); t < stop; t += rng.exponential(spec.rate)) {
    const auto sport = static_cast<std::uint16_t>(rng.uniform_int(1024, 65535));
    emit(out, t, Ipv4{}, sport, victim, transport, draw_size(spec.size, rng), ClassLabel::Attack);
  }
  return out;
}

Scenario overlay_scenario(const ScenarioConfig& config) {
  if (!(config.capture_length > 0)) throw Error(Errc::InvalidConfig, "capture_length must be positive");
  if (config.attacks.enabled) validate_attacks(config.attacks);

  Scenario scenario;
  for (std::size_t d = 0; d < config.devices.size(); ++d) {
    const auto& device = config.devices[d];
    Rng benign_rng = Rng::derive(config.seed, kStreamBenign + d);
    auto packets = gen_benign(device, config.capture_length, benign_rng);

    if (config.attacks.enabled) {
      Rng sched = Rng::derive(config.seed, kStreamSchedule + d);
      std::array<AttackKind, 3> order = kAttackKinds;
      sched.shuffle(std::span<AttackKind>(order));
      std::array<double, 3> durations{};
      double total = 0;
      for (auto& dur : durations) {
        dur = sched.uniform(config.attacks.min_duration, config.attacks.max_duration);
        total += dur;
      }
      const double slack = config.capture_length - total;
      if (slack < 0) {
        throw Error(Errc::SchedulingInfeasible,
                    "three attacks totalling " + std::to_string(total) + " s do not fit in " +
                        std::to_string(config.capture_length) + " s for device " + device.device_ip.to_string());
      }
      // Uniform placement: split the idle time into four gaps at three sorted cut points.
      std::array<double, 3> cuts{sched.uniform(0, slack), sched.uniform(0, slack), sched.uniform(0, slack)};
      std::sort(cuts.begin(), cuts.end());
      double cursor = 0;
      double previous_cut = 0;
      for (std::size_t k = 0; k < 3; ++k) {
        cursor += cuts[k] - previous_cut;
        previous_cut = cuts[k];
        const auto& cls = config.attacks.for_kind(order[k]);
        AttackSpec spec{order[k], config.attacks.victim_ip, cls.port, cls.rate, durations[k], cls.size};
        Rng attack_rng = Rng::derive(config.seed, kStreamAttack + d * 8 + k);
        auto attack = gen_attack(spec, cursor, attack_rng);
        for (auto& p : attack) p.src_ip = device.device_ip;
        scenario.schedule.push_back({device.device_ip, order[k], cursor, durations[k], attack.size()});
        packets.insert(packets.end(), attack.begin(), attack.end());
        cursor += durations[k];
      }
    }
    std::stable_sort(packets.begin(), packets.end(), [](const auto& a, const auto& b) { return a.ts_us < b.ts_us; });
    scenario.packets.insert(scenario.packets.end(), packets.begin(), packets.end());
  }
  std::stable_sort(scenario.packets.begin(), scenario.packets.end(),
                   [](const auto& a, const auto& b) { return a.ts_us < b.ts_us; });

  if (!scenario.packets.empty()) {
    const std::int64_t t0 = scenario.packets.front().ts_us;
    for (auto& p : scenario.packets) p.ts_us -= t0;
    for (auto& a : scenario.schedule) a.start -= static_cast<double>(t0) * 1e-6;
  }
  return scenario;
}

std::string scenario_to_json(const ScenarioConfig& config) {
  json devices = json::array();
  for (const auto& d : config.devices) {
    json behaviors = json::array();
    for (const auto& b : d.behaviors) {
      json eps = json::array();
      for (const auto& e : b.endpoints) eps.push_back(endpoint_to_string(e));
      json jb{{"kind", to_string(b.kind)}, {"size", size_to_json(b.size)}, {"proto", to_string(b.proto)},
              {"endpoints", eps}};
      if (b.kind != BehaviorKind::Stream) jb["period"] = b.period;
      if (b.kind != BehaviorKind::Keepalive) jb["rate"] = b.rate;
      if (b.kind == BehaviorKind::BurstUpdate) jb["burst"] = b.burst;
      if (b.src_port != 0) jb["src_port"] = b.src_port;
      behaviors.push_back(std::move(jb));
    }
    devices.push_back(json{{"ip", d.device_ip.to_string()}, {"behaviors", behaviors}});
  }
  const auto& a = config.attacks;
  json attacks{{"enabled", a.enabled},
               {"victim_ip", a.victim_ip.to_string()},
               {"min_duration", a.min_duration},
               {"max_duration", a.max_duration},
               {"syn_flood", attack_class_to_json(a.syn_flood)},
               {"udp_flood", attack_class_to_json(a.udp_flood)},
               {"http_get_flood", attack_class_to_json(a.http_get_flood)}};
  json root{{"seed", config.seed},
            {"capture_length", config.capture_length},
            {"attacks", attacks},
            {"devices", devices}};
  return root.dump(2) + "\n";
}

ScenarioConfig scenario_from_json(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidConfig, std::string("scenario JSON: ") + e.what(), e.byte);
  }
  ScenarioConfig c = default_scenario();
  try {
    if (root.contains("seed")) c.seed = root.at("seed").get<std::uint64_t>();
    if (root.contains("capture_length")) c.capture_length = root.at("capture_length").get<double>();
    if (root.contains("attacks")) {
      const auto& ja = root.at("attacks");
      auto& a = c.attacks;
      if (ja.contains("enabled")) a.enabled = ja.at("enabled").get<bool>();
      if (ja.contains("victim_ip")) a.victim_ip = Ipv4::parse(ja.at("victim_ip").get<std::string>());
      if (ja.contains("min_duration")) a.min_duration = ja.at("min_duration").get<double>();
      if (ja.contains("max_duration")) a.max_duration = ja.at("max_duration").get<double>();
      if (ja.contains("syn_flood")) attack_class_from_json(ja.at("syn_flood"), a.syn_flood);
      if (ja.contains("udp_flood")) attack_class_from_json(ja.at("udp_flood"), a.udp_flood);
      if (ja.contains("http_get_flood")) attack_class_from_json(ja.at("http_get_flood"), a.http_get_flood);
    }
    if (root.contains("devices")) {
      c.devices.clear();
      for (const auto& jd : root.at("devices")) {
        DeviceProfile d;
        d.device_ip = Ipv4::parse(jd.at("ip").get<std::string>());
        for (const auto& jb : jd.at("behaviors")) {
          Behavior b;
          b.kind = behavior_from_string(jb.at("kind").get<std::string>());
          b.period = jb.value("period", 1.0);
          b.rate = jb.value("rate", 0.0);
          b.burst = jb.value("burst", 0.0);
          b.size = size_from_json(jb.at("size"));
          auto proto = protocol_from_string(jb.at("proto").get<std::string>());
          if (!proto || *proto == ProtocolClass::Http) {
            throw Error(Errc::InvalidConfig, "behavior proto must be TCP, UDP or OTHER (HTTP follows from port 80/8080)");
          }
          b.proto = *proto;
          b.src_port = jb.value("src_port", std::uint16_t{0});
          for (const auto& je : jb.at("endpoints")) b.endpoints.push_back(endpoint_from_string(je.get<std::string>()));
          d.behaviors.push_back(std::move(b));
        }
        validate_profile(d);
        c.devices.push_back(std::move(d));
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("scenario JSON: ") + e.what());
  }
  if (c.attacks.enabled) validate_attacks(c.attacks);
  return c;
}

} // namespace iotddos
