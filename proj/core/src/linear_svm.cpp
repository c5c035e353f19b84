#include "iotddos/linear_svm.hpp"

#include "iotddos/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace iotddos {

namespace {

inline double sign_of(ClassLabel l) { return l == ClassLabel::Attack ? 1.0 : -1.0; }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

} // namespace

LinearSvm LinearSvm::fit(const Matrix& X, std::span<const ClassLabel> y, const SvmParams& params, Rng& rng) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  if (n != y.size()) throw Error(Errc::DimensionMismatch, "feature rows and labels differ in length");
  if (n < 2) throw Error(Errc::TooFewRows, "linear SVM needs at least two rows");
  bool pos = false, neg = false;
  for (auto l : y) (l == ClassLabel::Attack ? pos : neg) = true;
  if (!pos || !neg) throw Error(Errc::DegenerateLabels, "linear SVM needs both classes");
  if (params.C <= 0 || params.eta0 <= 0 || params.epochs == 0) throw Error(Errc::InvalidConfig, "bad SVM parameters");

  const double lambda = 1.0 / (params.C * static_cast<double>(n));
  LinearSvm svm;
  svm.w_.assign(d, 0.0);
  svm.history_.push_back(svm.objective(X, y, lambda));

  // w is stored as scale * v so the shrink step is O(1).
  std::vector<double> v(d, 0.0);
  double scale = 1.0;
  double b = 0.0;
  std::vector<double> avg(d, 0.0);
  double avg_b = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  double t = 0.0;

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    const bool last = epoch + 1 == params.epochs;
    if (last) {
      std::fill(avg.begin(), avg.end(), 0.0);
      avg_b = 0.0;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const auto row = X.row(order[k]);
      const double yi = sign_of(y[order[k]]);
      const double eta = params.eta0 / (1.0 + params.eta0 * lambda * t);
      const double m = yi * (scale * dot(v, row) + b);
      scale *= 1.0 - eta * lambda;
      if (m < 1.0) {
        const double step = eta * yi / scale;
        for (std::size_t j = 0; j < d; ++j) v[j] += step * row[j];
        b += eta * yi;
      }
      if (scale < 1e-9) {
        for (auto& x : v) x *= scale;
        scale = 1.0;
      }
      if (last) {
        for (std::size_t j = 0; j < d; ++j) avg[j] += scale * v[j];
        avg_b += b;
      }
      t += 1.0;
    }
    for (std::size_t j = 0; j < d; ++j) svm.w_[j] = scale * v[j];
    svm.b_ = b;
    if (last) {
      for (std::size_t j = 0; j < d; ++j) svm.w_[j] = avg[j] / static_cast<double>(n);
      svm.b_ = avg_b / static_cast<double>(n);
    }
    svm.history_.push_back(svm.objective(X, y, lambda));
  }
  return svm;
}

double LinearSvm::margin(std::span<const double> row) const {
  if (row.size() != w_.size()) throw Error(Errc::ArityMismatch, "row width differs from SVM arity");
  return dot(w_, row) + b_;
}

double LinearSvm::predict_score(std::span<const double> row) const {
  return 1.0 / (1.0 + std::exp(-margin(row)));
}

double LinearSvm::objective(const Matrix& X, std::span<const ClassLabel> y, double lambda) const {
  double hinge = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    hinge += std::max(0.0, 1.0 - sign_of(y[i]) * (dot(w_, X.row(i)) + b_));
  }
  const double reg = 0.5 * lambda * dot(w_, w_);
  return reg + hinge / static_cast<double>(X.rows());
}

} // namespace iotddos
