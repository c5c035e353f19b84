#include "iotddos/model.hpp"

#include "iotddos/error.hpp"
#include "iotddos/ingest.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <future>
#include <thread>

namespace iotddos {

using nlohmann::json;

namespace {

constexpr int kModelVersion = 1;
constexpr std::string_view kModelFormat = "iotddos-model";

} // namespace

std::string_view to_string(ModelKind k) noexcept {
  switch (k) {
  case ModelKind::KN: return "kn";
  case ModelKind::LSVM: return "lsvm";
  case ModelKind::DT: return "dt";
  case ModelKind::RF: return "rf";
  case ModelKind::NN: return "nn";
  }
  return "?";
}

std::string_view display_name(ModelKind k) noexcept {
  switch (k) {
  case ModelKind::KN: return "KN";
  case ModelKind::LSVM: return "LSVM";
  case ModelKind::DT: return "DT";
  case ModelKind::RF: return "RF";
  case ModelKind::NN: return "NN";
  }
  return "?";
}

std::optional<ModelKind> model_kind_from_string(std::string_view s) noexcept {
  for (auto k : kModelKinds) {
    if (s == to_string(k) || s == display_name(k)) return k;
  }
  return std::nullopt;
}

KnnClassifier::KnnClassifier(Matrix points, std::vector<ClassLabel> labels, std::size_t k)
    : labels_(std::move(labels)), k_(k) {
  if (points.rows() != labels_.size()) throw Error(Errc::DimensionMismatch, "points and labels differ in length");
  if (k_ == 0) throw Error(Errc::InvalidConfig, "k must be positive");
  tree_ = KdTree(std::move(points));
}

double KnnClassifier::predict_score(std::span<const double> row) const {
  const auto nn = tree_.knn(row, k_);
  if (nn.empty()) return 0.0;
  std::size_t attack = 0;
  for (const auto& n : nn) attack += labels_[n.index] == ClassLabel::Attack ? 1 : 0;
  return static_cast<double>(attack) / static_cast<double>(nn.size());
}

TrainedModel::TrainedModel(ModelKind kind, std::size_t arity, std::optional<Scaler> scaler, std::uint64_t seed,
                           Hyperparameters hp, ModelImpl impl)
    : kind_(kind), arity_(arity), scaler_(std::move(scaler)), seed_(seed), hp_(hp), impl_(std::move(impl)) {
  if (static_cast<std::size_t>(kind_) != impl_.index()) throw Error(Errc::WrongKind, "model kind and payload differ");
  if (uses_scaler(kind_) != scaler_.has_value()) throw Error(Errc::WrongKind, "scaler presence does not match kind");
  if (scaler_ && scaler_->arity() != arity_) throw Error(Errc::ArityMismatch, "scaler arity differs from model");
}

double TrainedModel::predict_score(std::span<const double> row) const {
  if (row.size() != arity_) {
    throw Error(Errc::ArityMismatch,
                "model expects " + std::to_string(arity_) + " features, got " + std::to_string(row.size()));
  }
  std::array<double, kFeatureCount> buf{};
  std::span<const double> x = row;
  if (scaler_) {
    scaler_->apply_row(row, std::span<double>(buf.data(), arity_));
    x = std::span<const double>(buf.data(), arity_);
  }
  return std::visit([&](const auto& m) { return m.predict_score(x); }, impl_);
}

ClassLabel TrainedModel::predict(std::span<const double> row) const { return label_from_score(predict_score(row)); }

std::vector<double> TrainedModel::predict_scores(const Matrix& rows) const {
  if (rows.rows() > 0 && rows.cols() != arity_) {
    throw Error(Errc::ArityMismatch,
                "model expects " + std::to_string(arity_) + " features, got " + std::to_string(rows.cols()));
  }
  std::vector<double> out(rows.rows());
  const std::size_t n = rows.rows();
  const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), 16);
  if (workers <= 1 || n < 4096) {
    for (std::size_t i = 0; i < n; ++i) out[i] = predict_score(rows.row(i));
    return out;
  }
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t b = 0; b < n; b += chunk) {
    jobs.push_back(std::async(std::launch::async, [&, b] {
      const std::size_t e = std::min(n, b + chunk);
      for (std::size_t i = b; i < e; ++i) out[i] = predict_score(rows.row(i));
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

std::vector<ClassLabel> TrainedModel::predict(const Matrix& rows) const {
  const auto scores = predict_scores(rows);
  std::vector<ClassLabel> out(scores.size());
  std::transform(scores.begin(), scores.end(), out.begin(), label_from_score);
  return out;
}

TrainedModel fit(ModelKind kind, const Matrix& X, std::span<const ClassLabel> y, const Hyperparameters& hp,
                 std::uint64_t seed) {
  if (X.rows() != y.size()) throw Error(Errc::DimensionMismatch, "feature rows and labels differ in length");
  if (X.rows() < 2) throw Error(Errc::TooFewRows, "training needs at least two rows");
  std::optional<Scaler> scaler;
  Matrix scaled;
  const Matrix* rows = &X;
  if (uses_scaler(kind)) {
    scaler = fit_scaler(X);
    scaled = apply_scaler(*scaler, X);
    rows = &scaled;
  }
  const std::uint64_t stream = static_cast<std::uint64_t>(kind) + 1;
  ModelImpl impl;
  switch (kind) {
  case ModelKind::KN:
    impl = KnnClassifier(std::move(scaled), std::vector<ClassLabel>(y.begin(), y.end()), hp.kn_k);
    break;
  case ModelKind::LSVM: {
    Rng rng = Rng::derive(seed, stream);
    impl = LinearSvm::fit(*rows, y, hp.svm, rng);
    break;
  }
  case ModelKind::DT:
    impl = DecisionTree::fit(X, y, TreeParams{});
    break;
  case ModelKind::RF:
    impl = RandomForest::fit(X, y, hp.rf, Rng::derive(seed, stream).next_u64());
    break;
  case ModelKind::NN: {
    Rng rng = Rng::derive(seed, stream);
    impl = NeuralNet::fit(*rows, y, hp.nn, rng);
    break;
  }
  }
  return TrainedModel(kind, X.cols(), std::move(scaler), seed, hp, std::move(impl));
}

std::vector<double> feature_importance(const TrainedModel& model) {
  if (const auto* dt = std::get_if<DecisionTree>(&model.impl())) {
    return tree_feature_importance(std::span<const DecisionTree>(dt, 1));
  }
  if (const auto* rf = std::get_if<RandomForest>(&model.impl())) {
    return tree_feature_importance(rf->trees());
  }
  throw Error(Errc::WrongKind, std::string("feature importance is defined for dt and rf, not ") +
                                   std::string(to_string(model.kind())));
}

namespace {

json tree_to_json(const DecisionTree& t) {
  json j;
  j["arity"] = t.arity();
  std::vector<std::int32_t> feature;
  std::vector<double> threshold, weight, impurity, fraction;
  std::vector<std::uint32_t> left, right;
  for (const auto& n : t.nodes()) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    weight.push_back(n.weight);
    impurity.push_back(n.impurity);
    fraction.push_back(n.attack_fraction);
  }
  j["feature"] = feature;
  j["threshold"] = threshold;
  j["left"] = left;
  j["right"] = right;
  j["weight"] = weight;
  j["impurity"] = impurity;
  j["attack_fraction"] = fraction;
  return j;
}

DecisionTree tree_from_json(const json& j) {
  const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<std::uint32_t>>();
  const auto right = j.at("right").get<std::vector<std::uint32_t>>();
  const auto weight = j.at("weight").get<std::vector<double>>();
  const auto impurity = j.at("impurity").get<std::vector<double>>();
  const auto fraction = j.at("attack_fraction").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || weight.size() != n ||
      impurity.size() != n || fraction.size() != n) {
    throw Error(Errc::MalformedRecord, "tree node arrays differ in length");
  }
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = TreeNode{feature[i], threshold[i], left[i], right[i], weight[i], impurity[i], fraction[i]};
  }
  return DecisionTree::from_nodes(std::move(nodes), j.at("arity").get<std::size_t>());
}

std::vector<std::uint8_t> labels_to_bits(const std::vector<ClassLabel>& labels) {
  std::vector<std::uint8_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == ClassLabel::Attack ? 1 : 0;
  return out;
}

json to_json_doc(const TrainedModel& m) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["kind"] = to_string(m.kind());
  j["arity"] = m.arity();
  j["seed"] = m.seed();
  const auto& hp = m.hyperparameters();
  j["hyperparameters"] = {
      {"kn_k", hp.kn_k},
      {"rf", {{"trees", hp.rf.trees}, {"max_features", hp.rf.max_features}, {"bootstrap", hp.rf.bootstrap}}},
      {"svm", {{"C", hp.svm.C}, {"epochs", hp.svm.epochs}, {"eta0", hp.svm.eta0}}},
      {"nn",
       {{"hidden_layers", hp.nn.hidden_layers},
        {"hidden_units", hp.nn.hidden_units},
        {"epochs", hp.nn.epochs},
        {"batch", hp.nn.batch},
        {"learning_rate", hp.nn.learning_rate},
        {"beta1", hp.nn.beta1},
        {"beta2", hp.nn.beta2},
        {"epsilon", hp.nn.epsilon}}},
  };
  if (m.scaler()) j["scaler"] = {{"mean", m.scaler()->mean}, {"stddev", m.scaler()->stddev}};

  json p;
  std::visit(
      [&](const auto& impl) {
        using T = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<T, KnnClassifier>) {
          p["k"] = impl.k();
          p["rows"] = impl.tree().points().rows();
          p["points"] = impl.tree().points().data();
          p["labels"] = labels_to_bits(impl.labels());
        } else if constexpr (std::is_same_v<T, LinearSvm>) {
          p["weights"] = impl.weights();
          p["bias"] = impl.bias();
        } else if constexpr (std::is_same_v<T, DecisionTree>) {
          p["tree"] = tree_to_json(impl);
        } else if constexpr (std::is_same_v<T, RandomForest>) {
          json trees = json::array();
          for (const auto& t : impl.trees()) trees.push_back(tree_to_json(t));
          p["trees"] = std::move(trees);
        } else {
          p["widths"] = impl.widths();
          p["params"] = impl.params();
        }
      },
      m.impl());
  j["model"] = std::move(p);
  return j;
}

TrainedModel from_json_doc(const json& j) {
  try {
    if (!j.is_object() || j.value("format", std::string{}) != kModelFormat) {
      throw Error(Errc::MalformedHeader, "not an iotddos model file");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelVersion) {
      throw Error(Errc::VersionMismatch, "model file version " + std::to_string(version) + ", expected " +
                                             std::to_string(kModelVersion));
    }
    const auto kind = model_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw Error(Errc::MalformedRecord, "unknown model kind");
    const auto arity = j.at("arity").get<std::size_t>();
    if (arity != kFeatureCount && arity != kStatelessCount) {
      throw Error(Errc::ArityMismatch, "model arity must be 8 or 11");
    }
    Hyperparameters hp;
    const auto& h = j.at("hyperparameters");
    hp.kn_k = h.at("kn_k").get<std::size_t>();
    hp.rf.trees = h.at("rf").at("trees").get<std::size_t>();
    hp.rf.max_features = h.at("rf").at("max_features").get<std::size_t>();
    hp.rf.bootstrap = h.at("rf").at("bootstrap").get<bool>();
    hp.svm.C = h.at("svm").at("C").get<double>();
    hp.svm.epochs = h.at("svm").at("epochs").get<std::size_t>();
    hp.svm.eta0 = h.at("svm").at("eta0").get<double>();
    const auto& nn = h.at("nn");
    hp.nn.hidden_layers = nn.at("hidden_layers").get<std::size_t>();
    hp.nn.hidden_units = nn.at("hidden_units").get<std::size_t>();
    hp.nn.epochs = nn.at("epochs").get<std::size_t>();
    hp.nn.batch = nn.at("batch").get<std::size_t>();
    hp.nn.learning_rate = nn.at("learning_rate").get<double>();
    hp.nn.beta1 = nn.at("beta1").get<double>();
    hp.nn.beta2 = nn.at("beta2").get<double>();
    hp.nn.epsilon = nn.at("epsilon").get<double>();

    std::optional<Scaler> scaler;
    if (j.contains("scaler")) {
      Scaler s;
      s.mean = j.at("scaler").at("mean").get<std::vector<double>>();
      s.stddev = j.at("scaler").at("stddev").get<std::vector<double>>();
      if (s.mean.size() != s.stddev.size()) throw Error(Errc::MalformedRecord, "scaler arrays differ in length");
      scaler = std::move(s);
    }

    const auto& p = j.at("model");
    ModelImpl impl;
    switch (*kind) {
    case ModelKind::KN: {
      const auto rows = p.at("rows").get<std::size_t>();
      const auto data = p.at("points").get<std::vector<double>>();
      const auto bits = p.at("labels").get<std::vector<std::uint8_t>>();
      if (data.size() != rows * arity || bits.size() != rows) {
        throw Error(Errc::MalformedRecord, "knn payload has the wrong size");
      }
      Matrix pts(rows, arity);
      std::copy(data.begin(), data.end(), pts.row(0).data());
      std::vector<ClassLabel> labels(rows);
      for (std::size_t i = 0; i < rows; ++i) labels[i] = bits[i] ? ClassLabel::Attack : ClassLabel::Normal;
      impl = KnnClassifier(std::move(pts), std::move(labels), p.at("k").get<std::size_t>());
      break;
    }
    case ModelKind::LSVM: {
      auto w = p.at("weights").get<std::vector<double>>();
      if (w.size() != arity) throw Error(Errc::ArityMismatch, "svm weights have the wrong width");
      impl = LinearSvm(std::move(w), p.at("bias").get<double>());
      break;
    }
    case ModelKind::DT: {
      auto t = tree_from_json(p.at("tree"));
      if (t.arity() != arity) throw Error(Errc::ArityMismatch, "tree arity differs from model");
      impl = std::move(t);
      break;
    }
    case ModelKind::RF: {
      std::vector<DecisionTree> trees;
      for (const auto& t : p.at("trees")) {
        trees.push_back(tree_from_json(t));
        if (trees.back().arity() != arity) throw Error(Errc::ArityMismatch, "tree arity differs from model");
      }
      impl = RandomForest::from_trees(std::move(trees));
      break;
    }
    case ModelKind::NN: {
      NeuralNet net(p.at("widths").get<std::vector<std::size_t>>());
      auto params = p.at("params").get<std::vector<double>>();
      if (params.size() != net.params().size()) throw Error(Errc::MalformedRecord, "network parameter count");
      if (net.arity() != arity) throw Error(Errc::ArityMismatch, "network input differs from model");
      net.params() = std::move(params);
      impl = std::move(net);
      break;
    }
    }
    return TrainedModel(*kind, arity, std::move(scaler), j.at("seed").get<std::uint64_t>(), hp, std::move(impl));
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, std::string("model file: ") + e.what());
  }
}

} // namespace

std::string model_to_json(const TrainedModel& model) { return to_json_doc(model).dump(); }

TrainedModel model_from_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::MalformedHeader, "model file is not valid JSON");
  return from_json_doc(j);
}

std::vector<std::uint8_t> model_to_cbor(const TrainedModel& model) { return json::to_cbor(to_json_doc(model)); }

TrainedModel model_from_cbor(std::span<const std::uint8_t> bytes) {
  json j = json::from_cbor(bytes.begin(), bytes.end(), true, false);
  if (j.is_discarded()) throw Error(Errc::MalformedHeader, "model file is not valid CBOR");
  return from_json_doc(j);
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    write_text_file(path, model_to_json(model));
    return;
  }
  const auto bytes = model_to_cbor(model);
  write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

TrainedModel load_model(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  if (path.extension() == ".json") return model_from_json(raw);
  const auto* p = reinterpret_cast<const std::uint8_t*>(raw.data());
  return model_from_cbor(std::span<const std::uint8_t>(p, raw.size()));
}

} // namespace iotddos
