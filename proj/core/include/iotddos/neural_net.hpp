#pragma once

#include "iotddos/features.hpp"
#include "iotddos/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace iotddos {

struct NnParams {
  std::size_t hidden_layers = 3;
  std::size_t hidden_units = 11;
  std::size_t epochs = 100;
  std::size_t batch = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

// Fully connected net: ReLU hidden layers, one sigmoid output unit, binary
// cross-entropy loss. Parameters live in one flat vector, per layer W
// (out x in, row-major) followed by b.
class NeuralNet {
public:
  NeuralNet() = default;
  // Zero-initialized network with the given layer widths (input first, 1 last).
  explicit NeuralNet(std::vector<std::size_t> widths);

  // Glorot-uniform weights, zero biases.
  static NeuralNet glorot(std::vector<std::size_t> widths, Rng& rng);
  static NeuralNet fit(const Matrix& X, std::span<const ClassLabel> y, const NnParams& params, Rng& rng);

  double logit(std::span<const double> row) const;
  double predict_score(std::span<const double> row) const;

  // Mean cross-entropy over the rows in `batch`; `grad` receives its gradient.
  double loss_and_gradient(const Matrix& X, std::span<const ClassLabel> y, std::span<const std::size_t> batch,
                           std::vector<double>& grad) const;
  double loss(const Matrix& X, std::span<const ClassLabel> y, std::span<const std::size_t> batch) const;

  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  std::vector<double>& params() noexcept { return params_; }
  const std::vector<double>& params() const noexcept { return params_; }
  std::size_t arity() const noexcept { return widths_.empty() ? 0 : widths_.front(); }

  static std::size_t param_count(std::span<const std::size_t> widths);

private:
  std::vector<std::size_t> widths_;
  std::vector<double> params_;
};

class Adam {
public:
  Adam(std::size_t n, const NnParams& params);
  void step(std::vector<double>& theta, std::span<const double> grad);

private:
  NnParams p_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

// Largest |a - n| / max(|a|, |n|, 1e-6) over all parameters, comparing the
// analytic gradient with central differences (step h).
double nn_gradient_check(const NeuralNet& net, const Matrix& X, std::span<const ClassLabel> y,
                         std::span<const std::size_t> batch, double h = 1e-5);

} // namespace iotddos
