#pragma once

#include "iotddos/packet.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iotddos {

// Canonical column order of a feature row.
enum class Feature : std::size_t {
  Size = 0,
  DeltaT,
  DeltaT1, // first difference of DeltaT
  DeltaT2, // second difference of DeltaT
  IsTcp,
  IsUdp,
  IsHttp,
  IsOther,
  Bandwidth,
  DestCount,
  DestDelta,
};

inline constexpr std::size_t kFeatureCount = 11;
inline constexpr std::size_t kStatelessCount = 8;
inline constexpr double kDefaultWindow = 10.0;

constexpr std::size_t idx(Feature f) noexcept { return static_cast<std::size_t>(f); }

// Machine names (CSV headers) and display names (reports).
extern const std::array<std::string_view, kFeatureCount> kFeatureNames;
extern const std::array<std::string_view, kFeatureCount> kFeatureLabels;

enum class FeatureMode { Stateless, All };

constexpr std::size_t arity(FeatureMode m) noexcept { return m == FeatureMode::All ? kFeatureCount : kStatelessCount; }
std::string_view to_string(FeatureMode m) noexcept;
std::optional<FeatureMode> feature_mode_from_string(std::string_view s) noexcept;

using FeatureVector = std::array<double, kFeatureCount>;
using StatelessVector = std::array<double, kStatelessCount>;

// Dense row-major matrix of doubles.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  void push_row(std::span<const double> values);
  const std::vector<double>& data() const noexcept { return data_; }

  Matrix select_rows(std::span<const std::size_t> indices) const;
  Matrix first_columns(std::size_t n) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Provenance {
  Ipv4 device_ip;
  std::size_t window = 0;
  std::size_t packet = 0; // index within the device stream

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct LabeledDataset {
  Matrix features; // kFeatureCount columns
  std::vector<ClassLabel> labels;
  std::vector<Provenance> provenance;

  std::size_t size() const noexcept { return labels.size(); }
  LabeledDataset subset(std::span<const std::size_t> indices) const;
  // Keep the leading columns for the given mode.
  Matrix view(FeatureMode mode) const { return features.first_columns(arity(mode)); }
};

// One stream per source address, ordered by address. Input must be sorted by
// timestamp (UnsortedInput otherwise).
std::vector<DeviceStream> split_by_device(std::span<const PacketRecord> records);

// Windows anchored at the stream's first packet; empty windows are kept so
// indices follow wall-clock time.
std::vector<TimeWindow> window_partition(const DeviceStream& stream, double width = kDefaultWindow);

std::vector<StatelessVector> stateless_features(const DeviceStream& stream);

struct WindowStats {
  double bandwidth = 0.0; // bytes per second
  double dest_count = 0.0;
  double dest_delta = 0.0;

  friend bool operator==(const WindowStats&, const WindowStats&) = default;
};

std::vector<WindowStats> stateful_features(std::span<const TimeWindow> windows);

enum class LabelPolicy { Require, Ignore };

// Rows follow global timestamp order (ties: device address, stream index).
// With LabelPolicy::Require a packet without a label throws MissingLabel.
LabeledDataset assemble(std::span<const DeviceStream> streams, double width = kDefaultWindow,
                        LabelPolicy policy = LabelPolicy::Require);

// split_by_device + assemble.
LabeledDataset extract_features(std::span<const PacketRecord> records, double width = kDefaultWindow,
                                LabelPolicy policy = LabelPolicy::Require);

// Per-column z-score. A zero-variance column maps to 0.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t arity() const noexcept { return mean.size(); }
  void apply_row(std::span<const double> in, std::span<double> out) const;
};

Scaler fit_scaler(const Matrix& train);
Matrix apply_scaler(const Scaler& scaler, const Matrix& rows);

// Feature columns in canonical order, then label, then provenance.
std::string dataset_to_csv(const LabeledDataset& ds, std::string_view comment = {});
LabeledDataset dataset_from_csv(std::string_view text);

// Incremental counterpart of assemble() for one live capture. Keeps only the
// open window and the previous window's destination count per device.
class StreamingFeatureExtractor {
public:
  struct Row {
    FeatureVector features{};
    Provenance provenance;
  };

  struct ClosedWindow {
    Ipv4 device_ip;
    std::size_t index = 0;
    double start = 0.0;
    WindowStats stats;
    std::vector<PacketRecord> packets;
    std::vector<Row> rows; // one per packet, same order
  };

  explicit StreamingFeatureExtractor(double width = kDefaultWindow);

  // Packets must arrive in non-decreasing timestamp order. Returns windows
  // that the packet closes (including empty windows skipped over).
  std::vector<ClosedWindow> push(const PacketRecord& packet);
  // Closes every open window.
  std::vector<ClosedWindow> finish();

  std::size_t open_devices() const noexcept { return devices_.size(); }

private:
  struct DeviceState {
    std::int64_t first_ts = 0;
    std::size_t window = 0;
    std::size_t packets_seen = 0;
    double prev_dest_count = 0.0;
    std::optional<std::int64_t> last_ts;
    double last_dt = 0.0;
    double last_ddt = 0.0;
    std::vector<PacketRecord> open;
    std::vector<StatelessVector> open_stateless;
  };

  ClosedWindow close_window(Ipv4 device, DeviceState& st);

  double width_;
  std::int64_t width_us_;
  std::int64_t last_ts_ = 0;
  std::map<Ipv4, DeviceState> devices_;
};

} // namespace iotddos
