#include "iotddos/eval.hpp"

#include "iotddos/error.hpp"
#include "iotddos/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <thread>

namespace iotddos {

SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::TooFewRows, "cannot split an empty dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(Errc::InvalidConfig, "train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::derive(seed, 0x5B117);
  rng.shuffle(std::span<std::size_t>(order));
  const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  return s;
}

SplitIndices split(const LabeledDataset& ds, double train_fraction, std::uint64_t seed) {
  SplitIndices s = split_indices(ds.size(), train_fraction, seed);
  auto both = [&](const std::vector<std::size_t>& idx) {
    bool a = false, n = false;
    for (auto i : idx) (ds.labels[i] == ClassLabel::Attack ? a : n) = true;
    return a && n;
  };
  if (!both(s.train) || !both(s.test)) {
    throw Error(Errc::DegenerateSplit, "both classes must appear in the train and test splits");
  }
  return s;
}

namespace {

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  if (tp + fp == 0) {
    m.precision_degenerate = true;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    m.recall_degenerate = true;
  } else {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (m.precision + m.recall == 0.0) {
    m.f1_degenerate = true;
  } else {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

} // namespace

Metrics metrics(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted) {
  if (truth.size() != predicted.size()) throw Error(Errc::LengthMismatch, "truth and predictions differ in length");
  if (truth.empty()) throw Error(Errc::LengthMismatch, "no predictions to score");
  Metrics m;
  auto& c = m.confusion;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == ClassLabel::Attack;
    const bool p = predicted[i] == ClassLabel::Attack;
    if (t && p) ++c.tp;
    else if (!t && !p) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  m.attack = class_metrics(c.tp, c.fp, c.fn);
  m.normal = class_metrics(c.tn, c.fn, c.fp);
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return m;
}

const ModelResult* EvalReport::find(ModelKind k) const noexcept {
  for (const auto& r : models) {
    if (r.kind == k) return &r;
  }
  return nullptr;
}

namespace {

struct FitJob {
  ModelKind kind;
  FeatureMode mode;
};

struct FitOutcome {
  Metrics metrics;
  std::vector<double> importance;
};

FitOutcome run_job(const FitJob& job, const LabeledDataset& train, const LabeledDataset& test,
                   const Hyperparameters& hp, std::uint64_t seed) {
  const Matrix X = train.view(job.mode);
  const TrainedModel model = fit(job.kind, X, train.labels, hp, seed);
  const auto pred = model.predict(test.view(job.mode));
  FitOutcome out{metrics(test.labels, pred), {}};
  if (job.kind == ModelKind::RF || job.kind == ModelKind::DT) out.importance = feature_importance(model);
  return out;
}

std::vector<FitOutcome> run_jobs(const std::vector<FitJob>& jobs, const LabeledDataset& train,
                                 const LabeledDataset& test, const Hyperparameters& hp, std::uint64_t seed,
                                 bool parallel) {
  std::vector<FitOutcome> out(jobs.size());
  if (!parallel || std::thread::hardware_concurrency() <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = run_job(jobs[i], train, test, hp, seed);
    return out;
  }
  std::vector<std::future<FitOutcome>> futures;
  for (const auto& job : jobs) {
    futures.push_back(std::async(std::launch::async, [&, job] { return run_job(job, train, test, hp, seed); }));
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = futures[i].get();
  return out;
}

} // namespace

EvalReport evaluate(const LabeledDataset& ds, const Hyperparameters& hp, std::uint64_t seed,
                    const EvalOptions& options) {
  const SplitIndices s = split(ds, options.train_fraction, seed);
  const LabeledDataset train = ds.subset(s.train);
  const LabeledDataset test = ds.subset(s.test);

  std::vector<FitJob> jobs;
  for (auto k : options.models) jobs.push_back({k, options.mode});
  if (options.ablation) {
    const FeatureMode other = options.mode == FeatureMode::All ? FeatureMode::Stateless : FeatureMode::All;
    for (auto k : options.models) jobs.push_back({k, other});
  }
  const auto outcomes = run_jobs(jobs, train, test, hp, seed, options.parallel);

  EvalReport r;
  r.seed = seed;
  r.train_fraction = options.train_fraction;
  r.train_size = train.size();
  r.test_size = test.size();
  r.mode = options.mode;
  r.config_digest = options.config_digest;
  const std::vector<ClassLabel> all_attack(test.size(), ClassLabel::Attack);
  r.baseline = metrics(test.labels, all_attack);

  const std::size_t m = options.models.size();
  for (std::size_t i = 0; i < m; ++i) r.models.push_back({jobs[i].kind, outcomes[i].metrics});
  for (auto pref : {ModelKind::RF, ModelKind::DT}) {
    if (r.importance_source) break;
    for (std::size_t i = 0; i < m; ++i) {
      if (jobs[i].kind == pref) {
        r.importance_source = pref;
        r.importance = outcomes[i].importance;
        break;
      }
    }
  }
  if (options.ablation) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto& primary = outcomes[i].metrics.normal.f1;
      const auto& other = outcomes[m + i].metrics.normal.f1;
      AblationRow row{jobs[i].kind, 0.0, 0.0};
      if (options.mode == FeatureMode::All) {
        row.f1_normal_all = primary;
        row.f1_normal_stateless = other;
      } else {
        row.f1_normal_all = other;
        row.f1_normal_stateless = primary;
      }
      r.ablation.push_back(row);
    }
  }
  return r;
}

EvalReport run_table1(const LabeledDataset& ds, const Hyperparameters& hp, std::uint64_t seed, FeatureMode mode) {
  EvalOptions o;
  o.mode = mode;
  o.ablation = false;
  return evaluate(ds, hp, seed, o);
}

std::vector<AblationRow> run_table3_ablation(const LabeledDataset& ds, const Hyperparameters& hp,
                                             std::uint64_t seed) {
  EvalOptions o;
  o.mode = FeatureMode::All;
  o.ablation = true;
  return evaluate(ds, hp, seed, o).ablation;
}

std::string config_digest(std::string_view canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Threshold> parse_thresholds(std::string_view json_text) {
  using nlohmann::json;
  const json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("thresholds") || !j["thresholds"].is_array()) {
    throw Error(Errc::InvalidConfig, "thresholds file must be an object with a \"thresholds\" array");
  }
  std::vector<Threshold> out;
  for (const auto& t : j["thresholds"]) {
    Threshold th;
    try {
      th.metric = t.at("metric").get<std::string>();
      if (t.contains("model")) {
        th.model = model_kind_from_string(t["model"].get<std::string>());
        if (!th.model) throw Error(Errc::InvalidConfig, "unknown model in thresholds: " + t["model"].dump());
      }
      if (t.contains("min")) th.min = t["min"].get<double>();
      if (t.contains("max")) th.max = t["max"].get<double>();
    } catch (const json::exception& e) {
      throw Error(Errc::InvalidConfig, std::string("bad threshold entry: ") + e.what());
    }
    out.push_back(std::move(th));
  }
  return out;
}

namespace {

std::optional<double> metric_value(const Metrics& m, std::string_view name) {
  if (name == "accuracy") return m.accuracy;
  if (name == "precision_normal") return m.normal.precision;
  if (name == "recall_normal") return m.normal.recall;
  if (name == "f1_normal") return m.normal.f1;
  if (name == "precision_attack") return m.attack.precision;
  if (name == "recall_attack") return m.attack.recall;
  if (name == "f1_attack") return m.attack.f1;
  return std::nullopt;
}

} // namespace

std::vector<std::string> check_thresholds(const EvalReport& report, std::span<const Threshold> thresholds) {
  std::vector<std::string> out;
  for (const auto& t : thresholds) {
    std::optional<double> value;
    std::string who = t.model ? std::string(display_name(*t.model)) : std::string("report");
    if (t.metric == "baseline_accuracy") {
      value = report.baseline.accuracy;
      who = "baseline";
    } else if (t.model && t.metric == "f1_normal_delta") {
      for (const auto& a : report.ablation) {
        if (a.kind == *t.model) value = a.delta();
      }
    } else if (t.model) {
      if (const auto* r = report.find(*t.model)) value = metric_value(r->metrics, t.metric);
    }
    if (!value) {
      out.push_back(who + " " + t.metric + ": not available in this report");
      continue;
    }
    char buf[160];
    if (t.min && *value < *t.min) {
      std::snprintf(buf, sizeof buf, "%s %s = %.6f below minimum %.6f", who.c_str(), t.metric.c_str(), *value, *t.min);
      out.emplace_back(buf);
    }
    if (t.max && *value > *t.max) {
      std::snprintf(buf, sizeof buf, "%s %s = %.6f above maximum %.6f", who.c_str(), t.metric.c_str(), *value, *t.max);
      out.emplace_back(buf);
    }
  }
  return out;
}

} // namespace iotddos
