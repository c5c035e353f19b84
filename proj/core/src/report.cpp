#include "iotddos/report.hpp"

#include "iotddos/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>

namespace iotddos {

using nlohmann::json;

std::string_view to_string(ReportFormat f) noexcept {
  switch (f) {
  case ReportFormat::Text: return "text";
  case ReportFormat::Csv: return "csv";
  case ReportFormat::Json: return "json";
  }
  return "?";
}

std::optional<ReportFormat> report_format_from_string(std::string_view s) noexcept {
  if (s == "text") return ReportFormat::Text;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  return std::nullopt;
}

namespace {

struct MetricRow {
  std::string_view key;
  std::string_view label;
  double (*get)(const Metrics&);
};

const MetricRow kMetricRows[] = {
    {"precision_normal", "Precision (Normal)", [](const Metrics& m) { return m.normal.precision; }},
    {"recall_normal", "Recall (Normal)", [](const Metrics& m) { return m.normal.recall; }},
    {"f1_normal", "F1 (Normal)", [](const Metrics& m) { return m.normal.f1; }},
    {"precision_attack", "Precision (Attack)", [](const Metrics& m) { return m.attack.precision; }},
    {"recall_attack", "Recall (Attack)", [](const Metrics& m) { return m.attack.recall; }},
    {"f1_attack", "F1 (Attack)", [](const Metrics& m) { return m.attack.f1; }},
    {"accuracy", "Accuracy", [](const Metrics& m) { return m.accuracy; }},
};

std::string_view feature_label(std::size_t i) { return i < kFeatureCount ? kFeatureLabels[i] : std::string_view("?"); }

std::string emit_text(const EvalReport& r) {
  std::string out;
  auto line = [&](std::string s) {
    out += s;
    out += '\n';
  };
  line(fmt::format("seed {}  split {}/{} (train fraction {})  features {}  digest {}", r.seed, r.train_size,
                   r.test_size, r.train_fraction, to_string(r.mode), r.config_digest));
  line("");
  line("Classification results");
  std::string head = fmt::format("{:<20}", "");
  for (const auto& m : r.models) head += fmt::format("{:>9}", display_name(m.kind));
  head += fmt::format("{:>10}", "Baseline");
  line(head);
  for (const auto& row : kMetricRows) {
    std::string s = fmt::format("{:<20}", row.label);
    for (const auto& m : r.models) s += fmt::format("{:>9.3f}", row.get(m.metrics));
    s += fmt::format("{:>10.3f}", row.get(r.baseline));
    line(s);
  }

  if (!r.importance.empty()) {
    line("");
    line(fmt::format("Feature importance (Gini, {})", r.importance_source ? display_name(*r.importance_source) : ""));
    std::vector<std::size_t> order(r.importance.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return r.importance[a] > r.importance[b]; });
    for (auto i : order) line(fmt::format("  {:<22}{:>7.3f}", feature_label(i), r.importance[i]));
  }

  if (!r.ablation.empty()) {
    line("");
    line("F1 (Normal) by feature set");
    line(fmt::format("{:<8}{:>12}{:>12}{:>10}", "", "Stateless", "All", "Delta"));
    for (const auto& a : r.ablation) {
      line(fmt::format("{:<8}{:>12.3f}{:>12.3f}{:>+10.3f}", display_name(a.kind), a.f1_normal_stateless,
                       a.f1_normal_all, a.delta()));
    }
  }
  return out;
}

std::string num(double v) { return fmt::format("{}", v); }

std::string emit_csv(const EvalReport& r) {
  std::string out = "section,metric";
  for (const auto& m : r.models) out += fmt::format(",{}", to_string(m.kind));
  out += ",baseline\n";
  for (const auto& row : kMetricRows) {
    out += fmt::format("classification,{}", row.key);
    for (const auto& m : r.models) out += "," + num(row.get(m.metrics));
    out += "," + num(row.get(r.baseline)) + "\n";
  }
  for (std::size_t i = 0; i < r.importance.size(); ++i) {
    out += fmt::format("importance,{},{}\n", i < kFeatureCount ? kFeatureNames[i] : "?", num(r.importance[i]));
  }
  for (const auto& a : r.ablation) {
    out += fmt::format("ablation_stateless,f1_normal_{},{}\n", to_string(a.kind), num(a.f1_normal_stateless));
    out += fmt::format("ablation_all,f1_normal_{},{}\n", to_string(a.kind), num(a.f1_normal_all));
  }
  return out;
}

json class_json(const ClassMetrics& c) {
  return {{"precision", c.precision},
          {"recall", c.recall},
          {"f1", c.f1},
          {"precision_degenerate", c.precision_degenerate},
          {"recall_degenerate", c.recall_degenerate},
          {"f1_degenerate", c.f1_degenerate}};
}

ClassMetrics class_from(const json& j) {
  ClassMetrics c;
  c.precision = j.at("precision").get<double>();
  c.recall = j.at("recall").get<double>();
  c.f1 = j.at("f1").get<double>();
  c.precision_degenerate = j.at("precision_degenerate").get<bool>();
  c.recall_degenerate = j.at("recall_degenerate").get<bool>();
  c.f1_degenerate = j.at("f1_degenerate").get<bool>();
  return c;
}

json metrics_json(const Metrics& m) {
  const auto& c = m.confusion;
  return {{"normal", class_json(m.normal)},
          {"attack", class_json(m.attack)},
          {"accuracy", m.accuracy},
          {"confusion", {{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}}}};
}

Metrics metrics_from(const json& j) {
  Metrics m;
  m.normal = class_from(j.at("normal"));
  m.attack = class_from(j.at("attack"));
  m.accuracy = j.at("accuracy").get<double>();
  const auto& c = j.at("confusion");
  m.confusion = {c.at("tp").get<std::size_t>(), c.at("tn").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                 c.at("fn").get<std::size_t>()};
  return m;
}

ModelKind kind_from(const json& j) {
  auto k = model_kind_from_string(j.get<std::string>());
  if (!k) throw Error(Errc::MalformedRecord, "unknown model kind " + j.dump());
  return *k;
}

std::string emit_json(const EvalReport& r) {
  json j;
  j["schema"] = "iotddos-report";
  j["version"] = kReportSchemaVersion;
  j["seed"] = r.seed;
  j["train_fraction"] = r.train_fraction;
  j["train_size"] = r.train_size;
  j["test_size"] = r.test_size;
  j["features"] = to_string(r.mode);
  j["config_digest"] = r.config_digest;
  json models = json::array();
  for (const auto& m : r.models) models.push_back({{"model", to_string(m.kind)}, {"metrics", metrics_json(m.metrics)}});
  j["models"] = std::move(models);
  j["baseline"] = metrics_json(r.baseline);
  j["importance_source"] = r.importance_source ? json(to_string(*r.importance_source)) : json(nullptr);
  j["importance"] = r.importance;
  json abl = json::array();
  for (const auto& a : r.ablation) {
    abl.push_back({{"model", to_string(a.kind)},
                   {"f1_normal_stateless", a.f1_normal_stateless},
                   {"f1_normal_all", a.f1_normal_all}});
  }
  j["ablation"] = std::move(abl);
  return j.dump(2) + "\n";
}

} // namespace

std::string emit_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
  case ReportFormat::Text: return emit_text(report);
  case ReportFormat::Csv: return emit_csv(report);
  case ReportFormat::Json: return emit_json(report);
  }
  return {};
}

EvalReport report_from_json(std::string_view text) {
  const json j = json::parse(text, nullptr, false, true);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::MalformedHeader, "report is not a JSON object");
  try {
    if (j.at("schema").get<std::string>() != "iotddos-report") {
      throw Error(Errc::MalformedHeader, "not an iotddos report");
    }
    if (j.at("version").get<int>() != kReportSchemaVersion) {
      throw Error(Errc::VersionMismatch, "unsupported report version");
    }
    EvalReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.train_fraction = j.at("train_fraction").get<double>();
    r.train_size = j.at("train_size").get<std::size_t>();
    r.test_size = j.at("test_size").get<std::size_t>();
    const auto mode = feature_mode_from_string(j.at("features").get<std::string>());
    if (!mode) throw Error(Errc::MalformedRecord, "unknown feature mode");
    r.mode = *mode;
    r.config_digest = j.at("config_digest").get<std::string>();
    for (const auto& m : j.at("models")) r.models.push_back({kind_from(m.at("model")), metrics_from(m.at("metrics"))});
    r.baseline = metrics_from(j.at("baseline"));
    if (!j.at("importance_source").is_null()) r.importance_source = kind_from(j.at("importance_source"));
    r.importance = j.at("importance").get<std::vector<double>>();
    for (const auto& a : j.at("ablation")) {
      r.ablation.push_back({kind_from(a.at("model")), a.at("f1_normal_stateless").get<double>(),
                            a.at("f1_normal_all").get<double>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("report: ") + e.what());
  }
}

} // namespace iotddos
