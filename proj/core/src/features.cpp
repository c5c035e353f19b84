#include "iotddos/features.hpp"

#include "iotddos/error.hpp"
#include "iotddos/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

namespace iotddos {

const std::array<std::string_view, kFeatureCount> kFeatureNames{
    "size", "delta_t", "d_delta_t", "d2_delta_t", "is_tcp", "is_udp",
    "is_http", "is_other", "bandwidth", "dest_count", "dest_delta"};

const std::array<std::string_view, kFeatureCount> kFeatureLabels{
    "Packet Size", "dT", "d(dT)/dt", "d2(dT)/dt2", "is_TCP", "is_UDP",
    "is_HTTP", "is_OTHER", "Bandwidth", "# Destinations", "Delta # Destinations"};

namespace {

std::int64_t width_to_us(double width) {
  if (!(width > 0) || !std::isfinite(width)) throw Error(Errc::InvalidConfig, "window width must be positive");
  const auto us = seconds_to_us(width);
  if (us < 1) throw Error(Errc::InvalidConfig, "window width below 1 microsecond");
  return us;
}

void set_flags(StatelessVector& v, ProtocolClass p) {
  v[idx(Feature::IsTcp)] = p == ProtocolClass::Tcp ? 1.0 : 0.0;
  v[idx(Feature::IsUdp)] = p == ProtocolClass::Udp ? 1.0 : 0.0;
  v[idx(Feature::IsHttp)] = p == ProtocolClass::Http ? 1.0 : 0.0;
  v[idx(Feature::IsOther)] = p == ProtocolClass::Other ? 1.0 : 0.0;
}

WindowStats window_stats(std::span<const PacketRecord> packets, double width, double prev_count) {
  WindowStats s;
  double bytes = 0;
  std::unordered_set<std::uint32_t> dsts;
  for (const auto& p : packets) {
    bytes += p.size;
    dsts.insert(p.dst_ip.value);
  }
  s.bandwidth = bytes / width;
  s.dest_count = static_cast<double>(dsts.size());
  s.dest_delta = s.dest_count - prev_count;
  return s;
}

FeatureVector join(const StatelessVector& sl, const WindowStats& ws) {
  FeatureVector v{};
  std::copy(sl.begin(), sl.end(), v.begin());
  v[idx(Feature::Bandwidth)] = ws.bandwidth;
  v[idx(Feature::DestCount)] = ws.dest_count;
  v[idx(Feature::DestDelta)] = ws.dest_delta;
  return v;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, p);
}

bool parse_double(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

bool parse_size(std::string_view s, std::size_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

} // namespace

std::string_view to_string(FeatureMode m) noexcept { return m == FeatureMode::All ? "all" : "stateless"; }

std::optional<FeatureMode> feature_mode_from_string(std::string_view s) noexcept {
  if (s == "all") return FeatureMode::All;
  if (s == "stateless") return FeatureMode::Stateless;
  return std::nullopt;
}

void Matrix::push_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw Error(Errc::DimensionMismatch, "row width differs from matrix width");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix Matrix::first_columns(std::size_t n) const {
  if (n > cols_) throw Error(Errc::DimensionMismatch, "requested more columns than present");
  if (n == cols_) return *this;
  Matrix out(rows_, n);
  for (std::size_t r = 0; r < rows_; ++r) {
    auto src = row(r);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(n), out.row(r).begin());
  }
  return out;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.features = features.select_rows(indices);
  out.labels.reserve(indices.size());
  out.provenance.reserve(indices.size());
  for (auto i : indices) {
    out.labels.push_back(labels[i]);
    if (!provenance.empty()) out.provenance.push_back(provenance[i]);
  }
  return out;
}

std::vector<DeviceStream> split_by_device(std::span<const PacketRecord> records) {
  std::map<Ipv4, std::vector<PacketRecord>> by_src;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && records[i].ts_us < records[i - 1].ts_us) {
      throw Error(Errc::UnsortedInput, "records not sorted by timestamp", i);
    }
    by_src[records[i].src_ip].push_back(records[i]);
  }
  std::vector<DeviceStream> out;
  out.reserve(by_src.size());
  for (auto& [ip, pkts] : by_src) out.push_back(DeviceStream{ip, std::move(pkts)});
  return out;
}

std::vector<TimeWindow> window_partition(const DeviceStream& stream, double width) {
  const std::int64_t width_us = width_to_us(width);
  std::vector<TimeWindow> windows;
  const auto& pkts = stream.packets;
  if (pkts.empty()) return windows;
  const std::int64_t t0 = pkts.front().ts_us;
  const auto last = static_cast<std::size_t>((pkts.back().ts_us - t0) / width_us);
  windows.reserve(last + 1);
  std::size_t begin = 0;
  for (std::size_t k = 0; k <= last; ++k) {
    const std::int64_t end_us = t0 + static_cast<std::int64_t>(k + 1) * width_us;
    std::size_t end = begin;
    while (end < pkts.size() && pkts[end].ts_us < end_us) ++end;
    TimeWindow w;
    w.device_ip = stream.device_ip;
    w.index = k;
    w.start = static_cast<double>(t0 + static_cast<std::int64_t>(k) * width_us) * 1e-6;
    w.width = width;
    w.packets = std::span<const PacketRecord>(pkts.data() + begin, end - begin);
    windows.push_back(w);
    begin = end;
  }
  return windows;
}

std::vector<StatelessVector> stateless_features(const DeviceStream& stream) {
  const auto& pkts = stream.packets;
  std::vector<StatelessVector> out(pkts.size());
  double prev_dt = 0.0;
  double prev_ddt = 0.0;
  for (std::size_t i = 0; i < pkts.size(); ++i) {
    auto& v = out[i];
    const double dt = i >= 1 ? static_cast<double>(pkts[i].ts_us - pkts[i - 1].ts_us) * 1e-6 : 0.0;
    const double ddt = i >= 2 ? dt - prev_dt : 0.0;
    const double d2dt = i >= 3 ? ddt - prev_ddt : 0.0;
    v[idx(Feature::Size)] = static_cast<double>(pkts[i].size);
    v[idx(Feature::DeltaT)] = dt;
    v[idx(Feature::DeltaT1)] = ddt;
    v[idx(Feature::DeltaT2)] = d2dt;
    set_flags(v, pkts[i].proto);
    prev_dt = dt;
    prev_ddt = ddt;
  }
  return out;
}

std::vector<WindowStats> stateful_features(std::span<const TimeWindow> windows) {
  std::vector<WindowStats> out;
  out.reserve(windows.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    auto s = window_stats(windows[k].packets, windows[k].width, prev);
    if (k == 0) s.dest_delta = 0.0;
    prev = s.dest_count;
    out.push_back(s);
  }
  return out;
}

LabeledDataset assemble(std::span<const DeviceStream> streams, double width, LabelPolicy policy) {
  struct Key {
    std::int64_t ts;
    std::uint32_t device;
    std::size_t packet;
    std::size_t row;
  };
  std::size_t total = 0;
  for (const auto& s : streams) total += s.packets.size();

  Matrix unordered(total, kFeatureCount);
  std::vector<ClassLabel> labels(total);
  std::vector<Provenance> prov(total);
  std::vector<Key> keys;
  keys.reserve(total);

  std::size_t row = 0;
  for (const auto& stream : streams) {
    const auto windows = window_partition(stream, width);
    const auto stateful = stateful_features(windows);
    const auto stateless = stateless_features(stream);
    std::size_t packet = 0;
    for (std::size_t k = 0; k < windows.size(); ++k) {
      for (const auto& p : windows[k].packets) {
        if (!p.label && policy == LabelPolicy::Require) {
          throw Error(Errc::MissingLabel, "packet " + std::to_string(packet) + " of device " +
                                              stream.device_ip.to_string() + " has no label");
        }
        const auto v = join(stateless[packet], stateful[k]);
        std::copy(v.begin(), v.end(), unordered.row(row).begin());
        labels[row] = p.label.value_or(ClassLabel::Normal);
        prov[row] = Provenance{stream.device_ip, k, packet};
        keys.push_back({p.ts_us, stream.device_ip.value, packet, row});
        ++packet;
        ++row;
      }
    }
  }
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    if (a.device != b.device) return a.device < b.device;
    return a.packet < b.packet;
  });

  LabeledDataset ds;
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = keys[i].row;
  ds.features = unordered.select_rows(order);
  ds.labels.reserve(total);
  ds.provenance.reserve(total);
  for (auto i : order) {
    ds.labels.push_back(labels[i]);
    ds.provenance.push_back(prov[i]);
  }
  if (total == 0) ds.features = Matrix(0, kFeatureCount);
  return ds;
}

LabeledDataset extract_features(std::span<const PacketRecord> records, double width, LabelPolicy policy) {
  const auto streams = split_by_device(records);
  return assemble(streams, width, policy);
}

void Scaler::apply_row(std::span<const double> in, std::span<double> out) const {
  for (std::size_t c = 0; c < mean.size(); ++c) {
    out[c] = stddev[c] > 0 ? (in[c] - mean[c]) / stddev[c] : 0.0;
  }
}

Scaler fit_scaler(const Matrix& train) {
  if (train.rows() < 2) throw Error(Errc::TooFewRows, "scaler needs at least 2 rows");
  const std::size_t cols = train.cols();
  Scaler s;
  s.mean.assign(cols, 0.0);
  s.stddev.assign(cols, 0.0);
  const double n = static_cast<double>(train.rows());
  for (std::size_t r = 0; r < train.rows(); ++r) {
    auto row = train.row(r);
    for (std::size_t c = 0; c < cols; ++c) s.mean[c] += row[c];
  }
  for (auto& m : s.mean) m /= n;
  for (std::size_t r = 0; r < train.rows(); ++r) {
    auto row = train.row(r);
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = row[c] - s.mean[c];
      s.stddev[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    s.stddev[c] = std::sqrt(s.stddev[c] / n);
    // Columns that are constant up to rounding count as constant.
    if (s.stddev[c] <= 1e-12 * std::max(1.0, std::abs(s.mean[c]))) s.stddev[c] = 0.0;
  }
  return s;
}

Matrix apply_scaler(const Scaler& scaler, const Matrix& rows) {
  if (rows.cols() != scaler.arity()) throw Error(Errc::ArityMismatch, "scaler arity differs from rows");
  Matrix out(rows.rows(), rows.cols());
  for (std::size_t r = 0; r < rows.rows(); ++r) scaler.apply_row(rows.row(r), out.row(r));
  return out;
}

std::string dataset_to_csv(const LabeledDataset& ds, std::string_view comment) {
  std::string out;
  out.reserve(64 + ds.size() * 96);
  if (!comment.empty()) {
    out += "# ";
    out += comment;
    out += '\n';
  }
  const std::size_t cols = ds.features.cols();
  for (std::size_t c = 0; c < cols; ++c) {
    out += kFeatureNames[c];
    out += ',';
  }
  out += "label,device_ip,window,packet\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (double v : ds.features.row(r)) {
      append_double(out, v);
      out += ',';
    }
    out += to_string(ds.labels[r]);
    if (r < ds.provenance.size()) {
      const auto& p = ds.provenance[r];
      out += ',';
      out += p.device_ip.to_string();
      out += ',';
      out += std::to_string(p.window);
      out += ',';
      out += std::to_string(p.packet);
    } else {
      out += ",,,";
    }
    out += '\n';
  }
  return out;
}

LabeledDataset dataset_from_csv(std::string_view text) {
  LabeledDataset ds;
  std::size_t cols = 0;
  bool have_header = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto f = split_csv_line(line);
    if (!have_header) {
      auto label_pos = std::find(f.begin(), f.end(), std::string_view("label"));
      cols = static_cast<std::size_t>(label_pos - f.begin());
      if (label_pos == f.end() || (cols != kFeatureCount && cols != kStatelessCount)) {
        throw Error(Errc::MalformedHeader, "feature CSV header must list 8 or 11 features then label", line_no);
      }
      for (std::size_t c = 0; c < cols; ++c) {
        if (f[c] != kFeatureNames[c]) throw Error(Errc::MalformedHeader, "unexpected feature column order", line_no);
      }
      ds.features = Matrix(0, cols);
      have_header = true;
      continue;
    }
    if (f.size() < cols + 1) throw Error(Errc::MalformedRecord, "too few columns", line_no);
    values.assign(cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c) {
      if (!parse_double(f[c], values[c])) throw Error(Errc::MalformedRecord, "bad number", line_no);
    }
    auto label = label_from_string(f[cols]);
    if (!label) throw Error(Errc::MissingLabel, "row without a valid label", line_no);
    ds.features.push_row(values);
    ds.labels.push_back(*label);
    if (f.size() >= cols + 4 && !f[cols + 1].empty()) {
      Provenance p;
      auto ip = Ipv4::try_parse(f[cols + 1]);
      if (!ip || !parse_size(f[cols + 2], p.window) || !parse_size(f[cols + 3], p.packet)) {
        throw Error(Errc::MalformedRecord, "bad provenance", line_no);
      }
      p.device_ip = *ip;
      ds.provenance.push_back(p);
    }
  }
  if (!have_header) throw Error(Errc::MalformedHeader, "missing feature CSV header", 0);
  if (!ds.provenance.empty() && ds.provenance.size() != ds.labels.size()) {
    throw Error(Errc::MalformedRecord, "provenance present on only some rows");
  }
  return ds;
}

StreamingFeatureExtractor::StreamingFeatureExtractor(double width) : width_(width), width_us_(width_to_us(width)) {}

StreamingFeatureExtractor::ClosedWindow StreamingFeatureExtractor::close_window(Ipv4 device, DeviceState& st) {
  ClosedWindow w;
  w.device_ip = device;
  w.index = st.window;
  w.start = static_cast<double>(st.first_ts + static_cast<std::int64_t>(st.window) * width_us_) * 1e-6;
  w.stats = window_stats(st.open, width_, st.prev_dest_count);
  if (st.window == 0) w.stats.dest_delta = 0.0;
  st.prev_dest_count = w.stats.dest_count;
  w.packets = std::move(st.open);
  w.rows.reserve(w.packets.size());
  const std::size_t first_packet = st.packets_seen - w.packets.size();
  for (std::size_t i = 0; i < w.packets.size(); ++i) {
    Row r;
    r.features = join(st.open_stateless[i], w.stats);
    r.provenance = Provenance{device, st.window, first_packet + i};
    w.rows.push_back(r);
  }
  st.open = {};
  st.open_stateless.clear();
  ++st.window;
  return w;
}

std::vector<StreamingFeatureExtractor::ClosedWindow> StreamingFeatureExtractor::push(const PacketRecord& packet) {
  if (packet.ts_us < last_ts_) throw Error(Errc::UnsortedInput, "packets must arrive in timestamp order");
  last_ts_ = packet.ts_us;
  std::vector<ClosedWindow> closed;
  auto [it, inserted] = devices_.try_emplace(packet.src_ip);
  DeviceState& st = it->second;
  if (inserted) st.first_ts = packet.ts_us;
  const auto k = static_cast<std::size_t>((packet.ts_us - st.first_ts) / width_us_);
  while (st.window < k) closed.push_back(close_window(packet.src_ip, st));

  StatelessVector v{};
  const std::size_t i = st.packets_seen;
  const double dt = i >= 1 ? static_cast<double>(packet.ts_us - *st.last_ts) * 1e-6 : 0.0;
  const double ddt = i >= 2 ? dt - st.last_dt : 0.0;
  const double d2dt = i >= 3 ? ddt - st.last_ddt : 0.0;
  v[idx(Feature::Size)] = static_cast<double>(packet.size);
  v[idx(Feature::DeltaT)] = dt;
  v[idx(Feature::DeltaT1)] = ddt;
  v[idx(Feature::DeltaT2)] = d2dt;
  set_flags(v, packet.proto);
  st.last_ts = packet.ts_us;
  st.last_dt = dt;
  st.last_ddt = ddt;
  ++st.packets_seen;
  st.open.push_back(packet);
  st.open_stateless.push_back(v);
  return closed;
}

std::vector<StreamingFeatureExtractor::ClosedWindow> StreamingFeatureExtractor::finish() {
  std::vector<ClosedWindow> closed;
  for (auto& [ip, st] : devices_) {
    if (!st.open.empty()) closed.push_back(close_window(ip, st));
  }
  devices_.clear();
  return closed;
}

} // namespace iotddos
