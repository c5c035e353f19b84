#include "iotddos_cli/cli.hpp"

#include "iotddos/detect.hpp"
#include "iotddos/error.hpp"
#include "iotddos/eval.hpp"
#include "iotddos/features.hpp"
#include "iotddos/ingest.hpp"
#include "iotddos/model.hpp"
#include "iotddos/report.hpp"
#include "iotddos/simulate.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace iotddos::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::uint64_t seed = 42;
  bool seed_given = false;
  std::string config;
  std::string in;
  std::string out;
  std::string labels;
  std::string schedule;
  std::string dump_config;
  std::string format = "text";
  std::string features = "all";
  std::vector<std::string> models;
  std::string model_file;
  std::string thresholds;
  double window = kDefaultWindow;
  double threshold = 0.5;
  double train_fraction = kDefaultTrainFraction;
  bool no_ablation = false;
  bool sequential = false;
};

Hyperparameters hyperparameters_from_json(std::string_view text) {
  using nlohmann::json;
  const json root = json::parse(text, nullptr, false, true);
  if (root.is_discarded() || !root.is_object()) throw Error(Errc::InvalidConfig, "config is not a JSON object");
  const json& j = root.contains("hyperparameters") ? root["hyperparameters"] : root;
  Hyperparameters hp;
  try {
    hp.kn_k = j.value("kn_k", hp.kn_k);
    hp.rf.trees = j.value("rf_trees", hp.rf.trees);
    hp.rf.max_features = j.value("rf_features_per_split", hp.rf.max_features);
    hp.rf.bootstrap = j.value("rf_bootstrap", hp.rf.bootstrap);
    hp.svm.C = j.value("svm_C", hp.svm.C);
    hp.svm.epochs = j.value("svm_epochs", hp.svm.epochs);
    hp.svm.eta0 = j.value("svm_eta0", hp.svm.eta0);
    hp.nn.hidden_layers = j.value("nn_hidden_layers", hp.nn.hidden_layers);
    hp.nn.hidden_units = j.value("nn_hidden_units", hp.nn.hidden_units);
    hp.nn.epochs = j.value("nn_epochs", hp.nn.epochs);
    hp.nn.batch = j.value("nn_batch", hp.nn.batch);
    hp.nn.learning_rate = j.value("nn_learning_rate", hp.nn.learning_rate);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("hyperparameters: ") + e.what());
  }
  return hp;
}

std::string canonical(const Hyperparameters& hp) {
  std::ostringstream s;
  s.precision(17);
  s << "kn_k=" << hp.kn_k << ";rf=" << hp.rf.trees << ',' << hp.rf.max_features << ',' << hp.rf.bootstrap
    << ";svm=" << hp.svm.C << ',' << hp.svm.epochs << ',' << hp.svm.eta0 << ";nn=" << hp.nn.hidden_layers << ','
    << hp.nn.hidden_units << ',' << hp.nn.epochs << ',' << hp.nn.batch << ',' << hp.nn.learning_rate;
  return s.str();
}

Hyperparameters load_hyperparameters(const Options& o) {
  if (o.config.empty()) return {};
  return hyperparameters_from_json(read_text_file(o.config));
}

FeatureMode parse_mode(const std::string& s) {
  auto m = feature_mode_from_string(s);
  if (!m) throw CLI::ValidationError("--features", "expected stateless or all");
  return *m;
}

std::vector<ModelKind> parse_models(const std::vector<std::string>& names) {
  std::vector<ModelKind> out;
  for (const auto& n : names) {
    auto k = model_kind_from_string(n);
    if (!k) throw CLI::ValidationError("--model", "unknown model '" + n + "'");
    out.push_back(*k);
  }
  return out;
}

void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out.empty() || o.out == "-") {
    out << text;
  } else {
    write_text_file(o.out, text);
  }
}

std::string stamp(std::string_view cmd, std::uint64_t seed, const std::string& digest) {
  return "iotddos " + std::string(cmd) + " seed=" + std::to_string(seed) + " digest=" + digest;
}

std::vector<PacketRecord> load_capture(const std::string& path, const std::string& labels, bool want_labels) {
  const auto file = CaptureFile::from_path(path);
  auto records = read_capture(file).records;
  if (!labels.empty()) {
    attach_label_sidecar(records, labels);
  } else if (want_labels && file.format == CaptureFormat::Pcap) {
    const auto side = label_sidecar_path(file.path);
    if (fs::exists(side)) attach_label_sidecar(records, side);
  }
  return records;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  ScenarioConfig config = o.config.empty() ? default_scenario() : scenario_from_json(read_text_file(o.config));
  if (o.seed_given) config.seed = o.seed;
  const Scenario sc = overlay_scenario(config);
  const std::string config_json = scenario_to_json(config);
  if (!o.dump_config.empty()) write_text_file(o.dump_config, config_json);
  const std::string digest = config_digest(config_json);
  const std::string comment = stamp("simulate", config.seed, digest);
  const auto file = CaptureFile::from_path(o.out);
  if (file.format == CaptureFormat::Csv) {
    write_text_file(file.path, encode_packet_csv(sc.packets, comment));
  } else {
    write_capture(sc.packets, file);
    write_label_sidecar(sc.packets, label_sidecar_path(file.path), comment);
  }
  if (!o.schedule.empty()) {
    std::string s = "# " + comment + "\ndevice_ip,attack,start,end,packets\n";
    for (const auto& a : sc.schedule) {
      std::ostringstream line;
      line.precision(17);
      line << a.device_ip.to_string() << ',' << to_string(a.kind) << ',' << a.start << ',' << a.end() << ','
           << a.packets << '\n';
      s += line.str();
    }
    write_text_file(o.schedule, s);
  }
  std::size_t attack = 0;
  for (const auto& p : sc.packets) attack += p.label == ClassLabel::Attack ? 1 : 0;
  out << "wrote " << sc.packets.size() << " packets (" << attack << " attack) to " << o.out << '\n';
  return kOk;
}

int cmd_extract(const Options& o, std::ostream& out) {
  const auto records = load_capture(o.in, o.labels, true);
  const auto ds = extract_features(records, o.window, LabelPolicy::Require);
  std::ostringstream canon;
  canon.precision(17);
  canon << "extract;window=" << o.window << ";input=" << config_digest(read_text_file(o.in));
  const std::string digest = config_digest(canon.str());
  std::ostringstream comment;
  comment << "iotddos extract window=" << o.window << " digest=" << digest;
  write_text_file(o.out, dataset_to_csv(ds, comment.str()));
  out << "wrote " << ds.size() << " feature rows to " << o.out << '\n';
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const FeatureMode mode = parse_mode(o.features);
  const auto kinds = parse_models(o.models.empty() ? std::vector<std::string>{"rf"} : o.models);
  if (kinds.size() != 1) throw CLI::ValidationError("--model", "train takes exactly one model");
  const Hyperparameters hp = load_hyperparameters(o);
  const auto ds = dataset_from_csv(read_text_file(o.in));
  const auto model = fit(kinds[0], ds.view(mode), ds.labels, hp, o.seed);
  save_model(model, o.out);
  out << "trained " << display_name(kinds[0]) << " on " << ds.size() << " rows (" << to_string(mode)
      << " features), saved to " << o.out << '\n';
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  const FeatureMode mode = parse_mode(o.features);
  auto format = report_format_from_string(o.format);
  if (!format) throw CLI::ValidationError("--format", "expected text, csv or json");
  const Hyperparameters hp = load_hyperparameters(o);
  std::vector<Threshold> thresholds;
  if (!o.thresholds.empty()) thresholds = parse_thresholds(read_text_file(o.thresholds));

  EvalOptions eo;
  if (!o.models.empty()) eo.models = parse_models(o.models);
  eo.mode = mode;
  eo.ablation = !o.no_ablation;
  eo.train_fraction = o.train_fraction;
  eo.parallel = !o.sequential;

  const std::string input = read_text_file(o.in);
  std::ostringstream canon;
  canon.precision(17);
  canon << "evaluate;seed=" << o.seed << ";fraction=" << o.train_fraction << ";features=" << to_string(mode)
        << ";ablation=" << eo.ablation << ";models=";
  for (auto k : eo.models) canon << to_string(k) << ',';
  canon << ';' << canonical(hp) << ";input=" << config_digest(input);
  eo.config_digest = config_digest(canon.str());

  const auto ds = dataset_from_csv(input);
  const EvalReport report = evaluate(ds, hp, o.seed, eo);
  std::string text = emit_report(report, *format);
  if (*format == ReportFormat::Csv) text = "# " + stamp("evaluate", o.seed, eo.config_digest) + "\n" + text;
  emit(o, out, text);

  const auto violations = check_thresholds(report, thresholds);
  for (const auto& v : violations) err << "threshold violated: " << v << '\n';
  return violations.empty() ? kOk : kThresholdViolated;
}

int cmd_detect(const Options& o, std::ostream& out) {
  const TrainedModel model = load_model(o.model_file);
  if (!o.features.empty()) {
    const FeatureMode mode = parse_mode(o.features);
    if (arity(mode) != model.arity()) {
      throw Error(Errc::ArityMismatch, "model was trained on " + std::to_string(model.arity()) +
                                           " features but --features " + o.features + " asks for " +
                                           std::to_string(arity(mode)));
    }
  }
  const auto records = load_capture(o.in, o.labels, false);
  const auto verdicts = detect_capture(model, records, o.window, o.threshold);

  std::ostringstream canon;
  canon.precision(17);
  canon << "detect;window=" << o.window << ";threshold=" << o.threshold << ";model=" << to_string(model.kind())
        << ',' << model.arity() << ',' << model.seed() << ";input=" << config_digest(read_text_file(o.in));
  std::ostringstream text;
  text << "# " << stamp("detect", model.seed(), config_digest(canon.str())) << '\n' << verdict_header() << '\n';
  std::size_t flagged = 0;
  for (const auto& v : verdicts) {
    text << format_verdict(v) << '\n';
    flagged += v.flagged ? 1 : 0;
  }
  emit(o, out, text.str());
  if (!o.out.empty() && o.out != "-") {
    out << flagged << " of " << verdicts.size() << " device windows flagged\n";
  }
  return kOk;
}

int exit_code_for(Errc c) {
  switch (c) {
  case Errc::MalformedHeader:
  case Errc::TruncatedRecord:
  case Errc::MalformedRecord:
  case Errc::UnsortedInput:
  case Errc::MissingLabel:
  case Errc::IoFailure:
    return kBadInput;
  case Errc::InvalidConfig:
    return kUsage;
  default:
    return kFailure;
  }
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"IoT DDoS detection pipeline: simulate, extract, train, evaluate, detect", "iotddos"};
  app.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
           "--seed",
           [&](const std::uint64_t& s) {
             o.seed = s;
             o.seed_given = true;
           },
           "Random seed (default 42)");
  };

  auto* sim = app.add_subcommand("simulate", "Generate a labeled capture from a scenario");
  sim->add_option("--config", o.config, "Scenario JSON (default: built-in three-device scenario)")->check(CLI::ExistingFile);
  sim->add_option("--out", o.out, "Capture to write (.csv, otherwise pcap plus a .labels.csv sidecar)")->required();
  sim->add_option("--schedule", o.schedule, "Also write the attack schedule as CSV");
  sim->add_option("--dump-config", o.dump_config, "Write the effective scenario JSON here");
  add_seed(sim);

  auto* ext = app.add_subcommand("extract", "Turn a labeled capture into a feature CSV");
  ext->add_option("--in", o.in, "Capture (.csv or pcap)")->required()->check(CLI::ExistingFile);
  ext->add_option("--labels", o.labels, "Label sidecar (default: <capture>.labels.csv for pcap)")
      ->check(CLI::ExistingFile);
  ext->add_option("--out", o.out, "Feature CSV to write")->required();
  ext->add_option("--window", o.window, "Window width in seconds")->check(CLI::PositiveNumber);

  auto* tr = app.add_subcommand("train", "Fit one model on a feature CSV");
  tr->add_option("--in", o.in, "Feature CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", o.out, "Model file (.json, otherwise CBOR)")->required();
  tr->add_option("--model", o.models, "kn, lsvm, dt, rf or nn (default rf)");
  tr->add_option("--features", o.features, "stateless or all");
  tr->add_option("--config", o.config, "Hyperparameter JSON")->check(CLI::ExistingFile);
  add_seed(tr);

  auto* ev = app.add_subcommand("evaluate", "Split, train and score models; print the result tables");
  ev->add_option("--in", o.in, "Feature CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", o.out, "Report file (default stdout)");
  ev->add_option("--format", o.format, "text, csv or json");
  ev->add_option("--model", o.models, "Models to evaluate (default all)")->delimiter(',');
  ev->add_option("--features", o.features, "stateless or all");
  ev->add_option("--config", o.config, "Hyperparameter JSON")->check(CLI::ExistingFile);
  ev->add_option("--thresholds", o.thresholds, "Acceptance thresholds JSON; exit 4 when violated")
      ->check(CLI::ExistingFile);
  ev->add_option("--train-fraction", o.train_fraction, "Training share of the split")->check(CLI::Range(0.0, 1.0));
  ev->add_flag("--no-ablation", o.no_ablation, "Skip the stateless/all comparison");
  ev->add_flag("--sequential", o.sequential, "Fit models one after another");
  add_seed(ev);

  auto* det = app.add_subcommand("detect", "Replay a capture through a trained model, one verdict per device window");
  det->add_option("--in", o.in, "Capture (.csv or pcap)")->required()->check(CLI::ExistingFile);
  det->add_option("--model-file", o.model_file, "Model written by train")->required()->check(CLI::ExistingFile);
  det->add_option("--out", o.out, "Verdict file (default stdout)");
  det->add_option("--window", o.window, "Window width in seconds")->check(CLI::PositiveNumber);
  det->add_option("--threshold", o.threshold, "Flag when the attack fraction exceeds this")
      ->check(CLI::Range(0.0, 1.0));
  det->add_option("--features", o.features, "Expected feature set of the model");
  det->add_option("--labels", o.labels, "Unused by detection; accepted for symmetry")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kOk;
    err << app.help();
    return kUsage;
  }
  if (det->parsed() && det->count("--features") == 0) o.features.clear();

  try {
    if (sim->parsed()) return cmd_simulate(o, out);
    if (ext->parsed()) return cmd_extract(o, out);
    if (tr->parsed()) return cmd_train(o, out);
    if (ev->parsed()) return cmd_evaluate(o, out, err);
    if (det->parsed()) return cmd_detect(o, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

} // namespace iotddos::cli
