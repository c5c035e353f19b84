#pragma once

#include "iotddos/cart.hpp"
#include "iotddos/features.hpp"
#include "iotddos/kdtree.hpp"
#include "iotddos/linear_svm.hpp"
#include "iotddos/neural_net.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace iotddos {

enum class ModelKind { KN, LSVM, DT, RF, NN };
inline constexpr std::array<ModelKind, 5> kModelKinds{ModelKind::KN, ModelKind::LSVM, ModelKind::DT, ModelKind::RF,
                                                       ModelKind::NN};

std::string_view to_string(ModelKind k) noexcept;        // "kn", "lsvm", ...
std::string_view display_name(ModelKind k) noexcept;     // "KN", "LSVM", ...
std::optional<ModelKind> model_kind_from_string(std::string_view s) noexcept;

// Whether the kind is trained on z-scored rows.
constexpr bool uses_scaler(ModelKind k) noexcept {
  return k == ModelKind::KN || k == ModelKind::LSVM || k == ModelKind::NN;
}

struct Hyperparameters {
  std::size_t kn_k = 5;
  ForestParams rf;
  SvmParams svm;
  NnParams nn;
};

class KnnClassifier {
public:
  KnnClassifier() = default;
  KnnClassifier(Matrix points, std::vector<ClassLabel> labels, std::size_t k);

  // Fraction of Attack labels among the k nearest training rows.
  double predict_score(std::span<const double> row) const;

  const KdTree& tree() const noexcept { return tree_; }
  const std::vector<ClassLabel>& labels() const noexcept { return labels_; }
  std::size_t k() const noexcept { return k_; }

private:
  KdTree tree_;
  std::vector<ClassLabel> labels_;
  std::size_t k_ = 5;
};

using ModelImpl = std::variant<KnnClassifier, LinearSvm, DecisionTree, RandomForest, NeuralNet>;

class TrainedModel {
public:
  TrainedModel(ModelKind kind, std::size_t arity, std::optional<Scaler> scaler, std::uint64_t seed,
               Hyperparameters hp, ModelImpl impl);

  ModelKind kind() const noexcept { return kind_; }
  std::size_t arity() const noexcept { return arity_; }
  const std::optional<Scaler>& scaler() const noexcept { return scaler_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const Hyperparameters& hyperparameters() const noexcept { return hp_; }
  const ModelImpl& impl() const noexcept { return impl_; }

  // Rows are raw (unscaled) feature rows of width arity().
  double predict_score(std::span<const double> row) const;
  ClassLabel predict(std::span<const double> row) const;
  std::vector<double> predict_scores(const Matrix& rows) const;
  std::vector<ClassLabel> predict(const Matrix& rows) const;

private:
  ModelKind kind_;
  std::size_t arity_;
  std::optional<Scaler> scaler_;
  std::uint64_t seed_;
  Hyperparameters hp_;
  ModelImpl impl_;
};

// Attack iff score > 0.5.
constexpr ClassLabel label_from_score(double score) noexcept {
  return score > 0.5 ? ClassLabel::Attack : ClassLabel::Normal;
}

// X holds raw rows; kinds that need scaling fit a scaler on X themselves.
TrainedModel fit(ModelKind kind, const Matrix& X, std::span<const ClassLabel> y, const Hyperparameters& hp,
                 std::uint64_t seed);

// Normalized Gini importance for DT and RF; WrongKind otherwise.
std::vector<double> feature_importance(const TrainedModel& model);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(std::string_view text);
std::vector<std::uint8_t> model_to_cbor(const TrainedModel& model);
TrainedModel model_from_cbor(std::span<const std::uint8_t> bytes);

// JSON text when the path ends in ".json", CBOR otherwise.
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

} // namespace iotddos
