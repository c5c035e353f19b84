#include "iotddos/cart.hpp"
#include "iotddos/detect.hpp"
#include "iotddos/eval.hpp"
#include "iotddos/ingest.hpp"
#include "iotddos/kdtree.hpp"
#include "iotddos/model.hpp"
#include "iotddos/neural_net.hpp"
#include "iotddos/report.hpp"
#include "iotddos/simulate.hpp"
#include "iotddos_cli/cli.hpp"

#include "../support/test_data.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace iotddos;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int n, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  fmt::print("criterion {}: {}  {}\n", n, ok ? "PASS" : "FAIL", detail);
  std::fflush(stdout);
}

std::vector<Neighbor> linear_knn(const Matrix& pts, std::span<const double> q, std::size_t k) {
  std::vector<Neighbor> all(pts.rows());
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    double d = 0;
    for (std::size_t c = 0; c < pts.cols(); ++c) d += (pts(i, c) - q[c]) * (pts(i, c) - q[c]);
    all[i] = {i, d};
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  all.resize(k);
  return all;
}

double walk_tree(const std::vector<TreeNode>& nodes, std::span<const double> row) {
  std::size_t at = 0;
  for (;;) {
    const auto& n = nodes[at];
    if (n.feature < 0) return n.attack_fraction;
    at = row[static_cast<std::size_t>(n.feature)] > n.threshold ? n.right : n.left;
  }
}

std::size_t rank_of(const std::vector<double>& w, std::size_t f) {
  std::vector<std::size_t> order(w.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return w[a] > w[b]; });
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), f) - order.begin()) + 1;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "iotddos");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != cli::kOk) fmt::print("  cli {} failed: {}", args[1], err.str());
  return code;
}

struct PipelineBytes {
  std::string capture;
  std::string features;
  std::string model;
  std::string report;
};

PipelineBytes run_pipeline(const fs::path& dir, const std::string& scenario) {
  fs::create_directories(dir);
  const auto p = [&](const char* name) { return (dir / name).string(); };
  run_cli({"simulate", "--config", scenario, "--out", p("cap.pcap"), "--seed", "42"});
  run_cli({"extract", "--in", p("cap.pcap"), "--out", p("features.csv")});
  run_cli({"train", "--in", p("features.csv"), "--out", p("rf.cbor"), "--model", "rf", "--seed", "42"});
  run_cli({"evaluate", "--in", p("features.csv"), "--format", "json", "--out", p("report.json"), "--seed", "42"});
  PipelineBytes b;
  for (auto [field, name] : {std::pair{&b.capture, "cap.pcap"}, std::pair{&b.features, "features.csv"},
                             std::pair{&b.model, "rf.cbor"}, std::pair{&b.report, "report.json"}}) {
    if (fs::exists(p(name))) *field = read_text_file(p(name));
  }
  return b;
}

} // namespace

int main() {
  const auto t_all = Clock::now();

  // 1: baseline imbalance on the default scenario.
  auto t0 = Clock::now();
  const ScenarioConfig config = default_scenario(42);
  const Scenario scenario = overlay_scenario(config);
  const LabeledDataset ds = extract_features(scenario.packets);
  const auto split_idx = split(ds, kDefaultTrainFraction, 42);
  const auto test = ds.subset(split_idx.test);
  const std::vector<ClassLabel> all_attack(test.size(), ClassLabel::Attack);
  const double baseline = metrics(test.labels, all_attack).accuracy;
  const double t_baseline = seconds_since(t0);
  verdict(1, baseline >= 0.90 && baseline <= 0.96 && t_baseline < 60.0,
          fmt::format("baseline accuracy {:.4f} in [0.90, 0.96]; {} packets; {:.1f} s < 60 s", baseline,
                      scenario.packets.size(), t_baseline));

  // 2: Table I, all five models on one split.
  const Hyperparameters hp;
  EvalOptions opts;
  const EvalReport report = evaluate(ds, hp, 42, opts);
  const double t_pipeline = seconds_since(t0);
  {
    bool ok = t_pipeline < 300.0;
    std::string detail;
    double lsvm_recall = 1.0, other_min = 1.0;
    for (auto kind : kModelKinds) {
      const auto* r = report.find(kind);
      if (!r) {
        ok = false;
        continue;
      }
      const auto& m = r->metrics;
      detail += fmt::format("{} acc {:.4f} F1a {:.4f} Rn {:.4f}; ", display_name(kind), m.accuracy, m.attack.f1,
                            m.normal.recall);
      if (kind == ModelKind::LSVM) {
        ok = ok && m.accuracy >= 0.97;
        lsvm_recall = m.normal.recall;
      } else {
        ok = ok && m.accuracy >= 0.99 && m.attack.f1 >= 0.99;
        other_min = std::min(other_min, m.normal.recall);
      }
    }
    ok = ok && lsvm_recall < other_min;
    verdict(2, ok, detail + fmt::format("pipeline {:.1f} s < 300 s", t_pipeline));
  }

  // 3: Table II ranks.
  {
    const auto& w = report.importance;
    const bool size_top = rank_of(w, idx(Feature::Size)) == 1 && w[idx(Feature::Size)] > 0.3;
    const std::size_t rb = rank_of(w, idx(Feature::Bandwidth));
    const std::size_t rc = rank_of(w, idx(Feature::DestCount));
    const std::size_t rd = rank_of(w, idx(Feature::DestDelta));
    const bool bottom = rb >= 7 && rc >= 7 && rd >= 7;
    verdict(3, size_top && bottom,
            fmt::format("size weight {:.3f} rank {}; bandwidth rank {}, destinations rank {}, delta rank {} (>= 7 of 11)",
                        w[idx(Feature::Size)], rank_of(w, idx(Feature::Size)), rb, rc, rd));
  }

  // 4: Table III ablation.
  {
    std::size_t improved = 0;
    double rf_delta = -1.0;
    std::string detail;
    for (const auto& a : report.ablation) {
      improved += a.delta() >= 0.0 ? 1 : 0;
      if (a.kind == ModelKind::RF) rf_delta = a.delta();
      detail += fmt::format("{} {:+.4f}; ", display_name(a.kind), a.delta());
    }
    verdict(4, improved >= 3 && rf_delta >= 0.005,
            detail + fmt::format("{} of 5 non-negative, RF {:+.4f} >= 0.005", improved, rf_delta));
  }

  // 5: marginal statistics of the simulated capture.
  {
    std::size_t atk = 0, small = 0, atk_tcp = 0, atk_udp = 0, ben_tcp = 0, ben_udp = 0;
    for (const auto& p : scenario.packets) {
      const bool tcp = p.proto == ProtocolClass::Tcp || p.proto == ProtocolClass::Http;
      const bool udp = p.proto == ProtocolClass::Udp;
      if (p.label == ClassLabel::Attack) {
        ++atk;
        small += p.size < 100 ? 1 : 0;
        atk_tcp += tcp;
        atk_udp += udp;
      } else {
        ben_tcp += tcp;
        ben_udp += udp;
      }
    }
    const double frac = static_cast<double>(small) / static_cast<double>(atk);
    const double ben_ratio = static_cast<double>(ben_udp) / static_cast<double>(std::max<std::size_t>(ben_tcp, 1));
    const double atk_ratio = static_cast<double>(atk_tcp) / static_cast<double>(std::max<std::size_t>(atk_udp, 1));
    verdict(5, frac >= 0.9 && ben_ratio > 1.0 && atk_ratio > 1.0,
            fmt::format("attack P(size<100) {:.3f} >= 0.9; benign UDP:TCP {:.2f} > 1; attack TCP:UDP {:.2f} > 1", frac,
                        ben_ratio, atk_ratio));
  }

  // 6: oracle equivalence on the real dataset.
  {
    const auto train = ds.subset(split_idx.train);
    const Scaler scaler = fit_scaler(train.features);
    const Matrix scaled_train = apply_scaler(scaler, train.features);
    const Matrix scaled_test = apply_scaler(scaler, test.features);
    const KdTree tree(scaled_train);
    Rng rng(606);
    std::size_t knn_mismatch = 0;
    for (int q = 0; q < 500; ++q) {
      const auto row = scaled_test.row(rng.index(scaled_test.rows()));
      if (tree.knn(row, hp.kn_k) != linear_knn(scaled_train, row, hp.kn_k)) ++knn_mismatch;
    }

    const auto dt = fit(ModelKind::DT, train.features, train.labels, hp, 42);
    const auto& dt_impl = std::get<DecisionTree>(dt.impl());
    std::size_t dt_mismatch = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (walk_tree(dt_impl.nodes(), test.features.row(i)) != dt.predict_score(test.features.row(i))) ++dt_mismatch;
    }

    std::size_t rf_mismatch = 0;
    for (std::uint64_t s : {1u, 2u, 3u}) {
      const auto idx_s = split_indices(ds.size(), 0.05, 6000 + s).train;
      const auto sub = ds.subset(idx_s);
      const auto single = DecisionTree::fit(sub.features, sub.labels, TreeParams{});
      const auto forest = RandomForest::fit(sub.features, sub.labels, ForestParams{1, kFeatureCount, false}, s);
      if (!(forest.trees().size() == 1 && forest.trees()[0] == single)) ++rf_mismatch;
      for (std::size_t i = 0; i < test.size(); i += 7) {
        if (forest.predict_score(test.features.row(i)) != single.predict_score(test.features.row(i))) {
          ++rf_mismatch;
          break;
        }
      }
    }
    verdict(6, knn_mismatch == 0 && dt_mismatch == 0 && rf_mismatch == 0,
            fmt::format("KNN mismatches {}/500; DT walk mismatches {}/{}; RF(1, no bootstrap, all) != DT on {}/3 datasets",
                        knn_mismatch, dt_mismatch, test.size(), rf_mismatch));
  }

  // 7: backprop against central differences.
  {
    const auto train_idx = split_indices(ds.size(), 0.02, 707).train;
    const auto sub = ds.subset(train_idx);
    const Matrix X = apply_scaler(fit_scaler(sub.features), sub.features);
    Rng rng(7);
    NeuralNet net = NeuralNet::glorot({kFeatureCount, 11, 11, 11, 1}, rng);
    std::vector<std::size_t> rows(X.rows());
    std::iota(rows.begin(), rows.end(), 0);
    auto batch_errors = [&](const NeuralNet& n) {
      double worst = 0;
      for (int b = 0; b < 3; ++b) {
        rng.shuffle(std::span<std::size_t>(rows));
        const std::vector<std::size_t> batch(rows.begin(), rows.begin() + 32);
        worst = std::max(worst, nn_gradient_check(n, X, sub.labels, batch));
      }
      return worst;
    };
    const double before = batch_errors(net);
    Adam opt(net.params().size(), hp.nn);
    std::vector<double> grad;
    for (int step = 0; step < 10; ++step) {
      rng.shuffle(std::span<std::size_t>(rows));
      const std::vector<std::size_t> batch(rows.begin(), rows.begin() + 32);
      net.loss_and_gradient(X, sub.labels, batch, grad);
      opt.step(net.params(), grad);
    }
    const double after = batch_errors(net);
    verdict(7, before < 1e-4 && after < 1e-4,
            fmt::format("max relative error {:.2e} before, {:.2e} after 10 steps (3 batches each) < 1e-4", before, after));
  }

  // 8: determinism of the command-line pipeline and pcap round-trip.
  {
    const fs::path root = fs::temp_directory_path() / "iotddos_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    ScenarioConfig small = default_scenario(42);
    small.capture_length = 240.0;
    small.attacks.min_duration = 30.0;
    small.attacks.max_duration = 40.0;
    for (auto* c : {&small.attacks.syn_flood, &small.attacks.udp_flood, &small.attacks.http_get_flood}) c->rate /= 4;
    const auto scenario_path = (root / "scenario.json").string();
    write_text_file(scenario_path, scenario_to_json(small));
    const auto a = run_pipeline(root / "a", scenario_path);
    const auto b = run_pipeline(root / "b", scenario_path);
    const bool same = !a.report.empty() && a.capture == b.capture && a.features == b.features &&
                      a.model == b.model && a.report == b.report;

    auto recs = testing::random_records(1000, 808, 3);
    auto back = parse_pcap(encode_pcap(recs)).records;
    std::size_t diffs = back.size() == recs.size() ? 0 : recs.size();
    for (std::size_t i = 0; i < std::min(back.size(), recs.size()); ++i) {
      auto r = recs[i];
      r.label.reset();
      diffs += r == back[i] ? 0 : 1;
    }
    fs::remove_all(root);
    verdict(8, same && diffs == 0,
            fmt::format("two seeded runs byte-identical: {} (report {} B); pcap round-trip differences {}/1000",
                        same ? "yes" : "no", a.report.size(), diffs));
  }

  // 9: end-to-end detection on an unseen capture.
  {
    const auto rf = fit(ModelKind::RF, ds.features, ds.labels, hp, 42);
    const Scenario fresh = overlay_scenario(default_scenario(7));
    const auto verdicts = detect_capture(rf, fresh.packets);
    const double w = kDefaultWindow;
    std::size_t missed = 0, spurious = 0, flagged = 0;
    for (const auto& v : verdicts) {
      flagged += v.flagged ? 1 : 0;
      bool inside = false, near = false;
      for (const auto& a : fresh.schedule) {
        if (a.device_ip != v.device_ip) continue;
        inside = inside || (v.start >= a.start && v.start + w <= a.end());
        near = near || (v.start + w > a.start - w && v.start < a.end() + w);
      }
      if (inside && !v.flagged) ++missed;
      if (!near && v.flagged) ++spurious;
    }
    ScenarioConfig benign_cfg = default_scenario(8);
    benign_cfg.attacks.enabled = false;
    const Scenario benign = overlay_scenario(benign_cfg);
    std::size_t benign_flags = 0;
    const auto benign_verdicts = detect_capture(rf, benign.packets);
    for (const auto& v : benign_verdicts) benign_flags += v.flagged ? 1 : 0;
    verdict(9, missed == 0 && spurious == 0 && benign_flags == 0,
            fmt::format("{} windows, {} flagged; missed attack windows {}, flags outside +/-1 window {}; "
                        "benign-only capture flags {}/{}",
                        verdicts.size(), flagged, missed, spurious, benign_flags, benign_verdicts.size()));
  }

  fmt::print("{} of 9 criteria passed in {:.1f} s\n", 9 - failures, seconds_since(t_all));
  return failures == 0 ? 0 : 1;
}
