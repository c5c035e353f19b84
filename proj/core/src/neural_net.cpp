#include "iotddos/neural_net.hpp"

#include "iotddos/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace iotddos {

namespace {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -[t log s(z) + (1 - t) log(1 - s(z))] without overflow.
inline double bce_from_logit(double z, double t) {
  return std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
}

inline double target(ClassLabel l) { return l == ClassLabel::Attack ? 1.0 : 0.0; }

struct Workspace {
  std::vector<std::vector<double>> act; // act[0] = input, act[l] = layer output
  std::vector<std::vector<double>> delta;
};

Workspace make_workspace(const std::vector<std::size_t>& widths) {
  Workspace ws;
  for (auto w : widths) {
    ws.act.emplace_back(w, 0.0);
    ws.delta.emplace_back(w, 0.0);
  }
  return ws;
}

// Returns the output logit; hidden activations are post-ReLU.
double forward(const std::vector<std::size_t>& widths, const std::vector<double>& p, std::span<const double> row,
               Workspace& ws) {
  std::copy(row.begin(), row.end(), ws.act[0].begin());
  std::size_t off = 0;
  const std::size_t layers = widths.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    const double* W = p.data() + off;
    const double* b = W + out * in;
    const auto& x = ws.act[l];
    auto& z = ws.act[l + 1];
    for (std::size_t o = 0; o < out; ++o) {
      double s = b[o];
      const double* w = W + o * in;
      for (std::size_t i = 0; i < in; ++i) s += w[i] * x[i];
      z[o] = (l + 1 < layers) ? std::max(s, 0.0) : s;
    }
    off += out * in + out;
  }
  return ws.act.back()[0];
}

void backward(const std::vector<std::size_t>& widths, const std::vector<double>& p, double dlogit, Workspace& ws,
              std::vector<double>& grad) {
  const std::size_t layers = widths.size() - 1;
  std::vector<std::size_t> offsets(layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    off += widths[l + 1] * widths[l] + widths[l + 1];
  }
  ws.delta[layers][0] = dlogit;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    const double* W = p.data() + offsets[l];
    double* gW = grad.data() + offsets[l];
    double* gb = gW + out * in;
    const auto& x = ws.act[l];
    const auto& d = ws.delta[l + 1];
    for (std::size_t o = 0; o < out; ++o) {
      if (d[o] == 0.0) continue;
      double* g = gW + o * in;
      for (std::size_t i = 0; i < in; ++i) g[i] += d[o] * x[i];
      gb[o] += d[o];
    }
    if (l == 0) break;
    auto& dx = ws.delta[l];
    for (std::size_t i = 0; i < in; ++i) {
      if (x[i] <= 0.0) {
        dx[i] = 0.0;
        continue;
      }
      double s = 0.0;
      for (std::size_t o = 0; o < out; ++o) s += W[o * in + i] * d[o];
      dx[i] = s;
    }
  }
}

} // namespace

std::size_t NeuralNet::param_count(std::span<const std::size_t> widths) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) n += widths[l + 1] * widths[l] + widths[l + 1];
  return n;
}

NeuralNet::NeuralNet(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2 || widths_.back() != 1) throw Error(Errc::InvalidConfig, "network must end in one unit");
  for (auto w : widths_) {
    if (w == 0) throw Error(Errc::InvalidConfig, "zero-width layer");
  }
  params_.assign(param_count(widths_), 0.0);
}

NeuralNet NeuralNet::glorot(std::vector<std::size_t> widths, Rng& rng) {
  NeuralNet net(std::move(widths));
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < net.widths_.size(); ++l) {
    const std::size_t in = net.widths_[l];
    const std::size_t out = net.widths_[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t k = 0; k < out * in; ++k) net.params_[off + k] = rng.uniform(-limit, limit);
    off += out * in + out;
  }
  return net;
}

double NeuralNet::logit(std::span<const double> row) const {
  if (row.size() != arity()) throw Error(Errc::ArityMismatch, "row width differs from network input");
  thread_local Workspace ws;
  if (ws.act.size() != widths_.size() || !std::equal(widths_.begin(), widths_.end(), ws.act.begin(),
                                                     [](std::size_t w, const auto& a) { return w == a.size(); })) {
    ws = make_workspace(widths_);
  }
  return forward(widths_, params_, row, ws);
}

double NeuralNet::predict_score(std::span<const double> row) const { return sigmoid(logit(row)); }

double NeuralNet::loss_and_gradient(const Matrix& X, std::span<const ClassLabel> y,
                                    std::span<const std::size_t> batch, std::vector<double>& grad) const {
  if (X.cols() != arity()) throw Error(Errc::ArityMismatch, "row width differs from network input");
  grad.assign(params_.size(), 0.0);
  if (batch.empty()) return 0.0;
  Workspace ws = make_workspace(widths_);
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (auto r : batch) {
    const double z = forward(widths_, params_, X.row(r), ws);
    const double t = target(y[r]);
    total += bce_from_logit(z, t);
    backward(widths_, params_, (sigmoid(z) - t) * inv, ws, grad);
  }
  return total * inv;
}

double NeuralNet::loss(const Matrix& X, std::span<const ClassLabel> y, std::span<const std::size_t> batch) const {
  if (batch.empty()) return 0.0;
  Workspace ws = make_workspace(widths_);
  double total = 0.0;
  for (auto r : batch) total += bce_from_logit(forward(widths_, params_, X.row(r), ws), target(y[r]));
  return total / static_cast<double>(batch.size());
}

Adam::Adam(std::size_t n, const NnParams& params) : p_(params), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& theta, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(p_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(p_.beta2, static_cast<double>(t_));
  const double lr = p_.learning_rate * std::sqrt(c2) / c1;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m_[i] = p_.beta1 * m_[i] + (1.0 - p_.beta1) * grad[i];
    v_[i] = p_.beta2 * v_[i] + (1.0 - p_.beta2) * grad[i] * grad[i];
    theta[i] -= lr * m_[i] / (std::sqrt(v_[i]) + p_.epsilon);
  }
}

NeuralNet NeuralNet::fit(const Matrix& X, std::span<const ClassLabel> y, const NnParams& params, Rng& rng) {
  const std::size_t n = X.rows();
  if (n != y.size()) throw Error(Errc::DimensionMismatch, "feature rows and labels differ in length");
  if (n < 2) throw Error(Errc::TooFewRows, "network needs at least two rows");
  bool pos = false, neg = false;
  for (auto l : y) (l == ClassLabel::Attack ? pos : neg) = true;
  if (!pos || !neg) throw Error(Errc::DegenerateLabels, "network needs both classes");
  if (params.batch == 0 || params.epochs == 0) throw Error(Errc::InvalidConfig, "bad network parameters");

  std::vector<std::size_t> widths{X.cols()};
  for (std::size_t l = 0; l < params.hidden_layers; ++l) widths.push_back(params.hidden_units);
  widths.push_back(1);
  NeuralNet net = glorot(widths, rng);
  Adam adam(net.params_.size(), params);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t b = 0; b < n; b += params.batch) {
      const std::size_t e = std::min(n, b + params.batch);
      net.loss_and_gradient(X, y, std::span<const std::size_t>(order).subspan(b, e - b), grad);
      adam.step(net.params_, grad);
    }
  }
  return net;
}

double nn_gradient_check(const NeuralNet& net, const Matrix& X, std::span<const ClassLabel> y,
                         std::span<const std::size_t> batch, double h) {
  std::vector<double> analytic;
  net.loss_and_gradient(X, y, batch, analytic);
  NeuralNet probe = net;
  auto& p = probe.params();
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + h;
    const double up = probe.loss(X, y, batch);
    p[i] = saved - h;
    const double down = probe.loss(X, y, batch);
    p[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

} // namespace iotddos
