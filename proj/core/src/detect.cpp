#include "iotddos/detect.hpp"

#include "iotddos/error.hpp"

#include <fmt/format.h>

namespace iotddos {

Detector::Detector(const TrainedModel& model, double width, double threshold)
    : model_(&model), threshold_(threshold), extractor_(width) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(Errc::InvalidConfig, "flag threshold must lie in [0, 1]");
}

Verdict Detector::judge(const StreamingFeatureExtractor::ClosedWindow& w) const {
  Verdict v;
  v.device_ip = w.device_ip;
  v.window = w.index;
  v.start = w.start;
  v.packets = w.rows.size();
  const std::size_t arity = model_->arity();
  for (const auto& r : w.rows) {
    if (model_->predict(std::span<const double>(r.features.data(), arity)) == ClassLabel::Attack) ++v.attack_packets;
  }
  v.attack_fraction = v.packets ? static_cast<double>(v.attack_packets) / static_cast<double>(v.packets) : 0.0;
  v.flagged = v.attack_fraction > threshold_;
  return v;
}

std::vector<Verdict> Detector::push(const PacketRecord& packet) {
  std::vector<Verdict> out;
  for (const auto& w : extractor_.push(packet)) out.push_back(judge(w));
  return out;
}

std::vector<Verdict> Detector::finish() {
  std::vector<Verdict> out;
  for (const auto& w : extractor_.finish()) out.push_back(judge(w));
  return out;
}

std::vector<Verdict> detect_capture(const TrainedModel& model, std::span<const PacketRecord> packets, double width,
                                    double threshold) {
  Detector d(model, width, threshold);
  std::vector<Verdict> out;
  for (const auto& p : packets) {
    auto v = d.push(p);
    out.insert(out.end(), v.begin(), v.end());
  }
  auto v = d.finish();
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::string verdict_header() { return "device_ip,window_index,packets,attack_fraction,flagged"; }

std::string format_verdict(const Verdict& v) {
  return fmt::format("{},{},{},{:.4f},{}", v.device_ip.to_string(), v.window, v.packets, v.attack_fraction,
                     v.flagged ? "FLAGGED" : "-");
}

} // namespace iotddos
