#pragma once

#include "iotddos/features.hpp"
#include "iotddos/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace iotddos {

struct SvmParams {
  double C = 1.0;
  std::size_t epochs = 20;
  double eta0 = 0.01;
};

// Primal linear SVM: minimizes lambda/2 |w|^2 + mean hinge(y (w.x + b)) with
// lambda = 1 / (C n), by shuffled stochastic subgradient steps. The returned
// weights are the average of the iterates seen during the last epoch.
class LinearSvm {
public:
  LinearSvm() = default;
  LinearSvm(std::vector<double> weights, double bias) : w_(std::move(weights)), b_(bias) {}

  static LinearSvm fit(const Matrix& X, std::span<const ClassLabel> y, const SvmParams& params, Rng& rng);

  double margin(std::span<const double> row) const;
  // Logistic map of the margin.
  double predict_score(std::span<const double> row) const;
  // lambda/2 |w|^2 + mean hinge.
  double objective(const Matrix& X, std::span<const ClassLabel> y, double lambda) const;

  const std::vector<double>& weights() const noexcept { return w_; }
  double bias() const noexcept { return b_; }
  // Objective at w = 0, then after each epoch.
  const std::vector<double>& loss_history() const noexcept { return history_; }

private:
  std::vector<double> w_;
  double b_ = 0.0;
  std::vector<double> history_;
};

} // namespace iotddos
