#pragma once

#include "iotddos/features.hpp"
#include "iotddos/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace iotddos {

inline constexpr double kDefaultTrainFraction = 0.85;

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded uniform shuffle; the first floor(fraction * n) indices train.
SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

// As split_indices, but DegenerateSplit unless both classes appear on both sides.
SplitIndices split(const LabeledDataset& ds, double train_fraction, std::uint64_t seed);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the matching denominator was zero (value reported as 0).
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

// Attack is the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct Metrics {
  ClassMetrics normal;
  ClassMetrics attack;
  double accuracy = 0.0;
  Confusion confusion;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

Metrics metrics(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted);

struct ModelResult {
  ModelKind kind{};
  Metrics metrics;

  friend bool operator==(const ModelResult&, const ModelResult&) = default;
};

struct AblationRow {
  ModelKind kind{};
  double f1_normal_stateless = 0.0;
  double f1_normal_all = 0.0;

  double delta() const noexcept { return f1_normal_all - f1_normal_stateless; }
  friend bool operator==(const AblationRow&, const AblationRow&) = default;
};

struct EvalReport {
  std::uint64_t seed = 0;
  double train_fraction = kDefaultTrainFraction;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  FeatureMode mode = FeatureMode::All;
  std::string config_digest;
  std::vector<ModelResult> models;
  Metrics baseline; // every row predicted Attack
  std::optional<ModelKind> importance_source;
  std::vector<double> importance; // one weight per feature column of `mode`
  std::vector<AblationRow> ablation;

  const ModelResult* find(ModelKind k) const noexcept;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalOptions {
  std::vector<ModelKind> models{kModelKinds.begin(), kModelKinds.end()};
  FeatureMode mode = FeatureMode::All;
  bool ablation = true;
  double train_fraction = kDefaultTrainFraction;
  std::string config_digest;
  bool parallel = true; // fit models concurrently when more than one core is available
};

// Table I: every requested model on one split, plus the all-Attack baseline
// and the forest's (or tree's) feature importance.
EvalReport run_table1(const LabeledDataset& ds, const Hyperparameters& hp, std::uint64_t seed,
                      FeatureMode mode = FeatureMode::All);

// Table III: F1(Normal) per model on the first 8 columns versus all 11, same split.
std::vector<AblationRow> run_table3_ablation(const LabeledDataset& ds, const Hyperparameters& hp, std::uint64_t seed);

// Both tables from one split, sharing the fits of the primary feature mode.
EvalReport evaluate(const LabeledDataset& ds, const Hyperparameters& hp, std::uint64_t seed,
                    const EvalOptions& options);

// 64-bit FNV-1a of a canonical configuration string, as 16 hex digits.
std::string config_digest(std::string_view canonical);

// Acceptance gate supplied as JSON:
//   {"thresholds": [{"model": "rf", "metric": "accuracy", "min": 0.99}, ...]}
// metric: accuracy, precision_normal, recall_normal, f1_normal,
// precision_attack, recall_attack, f1_attack, f1_normal_delta (needs the
// ablation), baseline_accuracy (no model).
struct Threshold {
  std::optional<ModelKind> model;
  std::string metric;
  std::optional<double> min;
  std::optional<double> max;
};

std::vector<Threshold> parse_thresholds(std::string_view json_text);
// One message per violated (or unevaluable) threshold.
std::vector<std::string> check_thresholds(const EvalReport& report, std::span<const Threshold> thresholds);

} // namespace iotddos
