#pragma once

#include "iotddos/features.hpp"
#include "iotddos/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace iotddos {

struct Verdict {
  Ipv4 device_ip;
  std::size_t window = 0;
  double start = 0.0; // seconds, capture clock
  std::size_t packets = 0;
  std::size_t attack_packets = 0;
  double attack_fraction = 0.0;
  bool flagged = false;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// Replays packets through per-device windowing, features and a model. A
// window is flagged when its attack-packet fraction exceeds the threshold.
class Detector {
public:
  Detector(const TrainedModel& model, double width = kDefaultWindow, double threshold = 0.5);

  std::vector<Verdict> push(const PacketRecord& packet);
  std::vector<Verdict> finish();

private:
  Verdict judge(const StreamingFeatureExtractor::ClosedWindow& w) const;

  const TrainedModel* model_;
  double threshold_;
  StreamingFeatureExtractor extractor_;
};

std::vector<Verdict> detect_capture(const TrainedModel& model, std::span<const PacketRecord> packets,
                                    double width = kDefaultWindow, double threshold = 0.5);

// "device_ip, window_index, packets, attack_fraction, flagged"
std::string verdict_header();
std::string format_verdict(const Verdict& v);

} // namespace iotddos
