#include "iotddos/cart.hpp"

#include "iotddos/error.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <thread>

namespace iotddos {

double gini_impurity(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) {
    if (c < 0) throw Error(Errc::EmptyNode, "negative class count");
    total += c;
  }
  if (total <= 0) throw Error(Errc::EmptyNode, "gini impurity of an empty node");
  double sum_sq = 0.0;
  for (double c : counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

double gini_impurity(double normal, double attack) {
  const double counts[2] = {normal, attack};
  return gini_impurity(counts);
}

Presort Presort::build(const Matrix& X) {
  Presort p;
  p.order.resize(X.cols());
  for (std::size_t f = 0; f < X.cols(); ++f) {
    auto& ord = p.order[f];
    ord.resize(X.rows());
    std::iota(ord.begin(), ord.end(), 0u);
    std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double va = X(a, f);
      const double vb = X(b, f);
      return va < vb || (va == vb && a < b);
    });
  }
  return p;
}

namespace {

// Weighted child impurity n_L*gini(L) + n_R*gini(R), up to the common factor.
inline double children_cost(double ln, double la, double rn, double ra) {
  const double lw = ln + la;
  const double rw = rn + ra;
  return (lw - (ln * ln + la * la) / lw) + (rw - (rn * rn + ra * ra) / rw);
}

struct Candidate {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double cost = 0.0;
};

class TreeBuilder {
public:
  TreeBuilder(const Matrix& X, std::span<const ClassLabel> y, const TreeParams& params, Rng* rng,
              std::span<const std::uint32_t> counts, const Presort& presort)
      : X_(X), params_(params), rng_(rng), features_(X.cols()) {
    const std::size_t n = X.rows();
    weight_.resize(n);
    attack_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      weight_[i] = counts.empty() ? 1.0 : static_cast<double>(counts[i]);
      attack_[i] = y[i] == ClassLabel::Attack ? 1 : 0;
    }
    order_.resize(features_);
    for (std::size_t f = 0; f < features_; ++f) {
      auto& dst = order_[f];
      const auto& src = presort.order[f];
      if (counts.empty()) {
        dst = src;
      } else {
        dst.reserve(src.size());
        for (auto r : src) {
          if (counts[r] > 0) dst.push_back(r);
        }
      }
    }
    goes_left_.assign(n, 0);
    scratch_.resize(order_.empty() ? 0 : order_[0].size());
  }

  std::vector<TreeNode> build() {
    const std::size_t active = order_.empty() ? 0 : order_[0].size();
    if (active == 0) throw Error(Errc::TooFewRows, "decision tree needs at least one weighted row");
    struct Work {
      std::uint32_t node;
      std::size_t begin;
      std::size_t end;
    };
    std::vector<Work> stack{{0, 0, active}};
    nodes_.push_back(TreeNode{});
    while (!stack.empty()) {
      const Work w = stack.back();
      stack.pop_back();
      double wn = 0, wa = 0;
      for (std::size_t i = w.begin; i < w.end; ++i) {
        const auto r = order_[0][i];
        (attack_[r] ? wa : wn) += weight_[r];
      }
      TreeNode& node = nodes_[w.node];
      node.weight = wn + wa;
      node.impurity = gini_impurity(wn, wa);
      node.attack_fraction = wa / (wn + wa);
      if (wn == 0 || wa == 0 || node.weight < params_.min_samples_split) continue;

      const Candidate best = choose_split(w.begin, w.end);
      if (!best.valid) continue;

      const auto& ord = order_[best.feature];
      std::size_t split = w.begin;
      while (split < w.end && X_(ord[split], best.feature) <= best.threshold) ++split;
      for (std::size_t i = w.begin; i < w.end; ++i) goes_left_[ord[i]] = i < split ? 1 : 0;
      for (std::size_t f = 0; f < features_; ++f) partition(order_[f], w.begin, w.end);

      const auto left = static_cast<std::uint32_t>(nodes_.size());
      const auto right = left + 1;
      nodes_.push_back(TreeNode{});
      nodes_.push_back(TreeNode{});
      TreeNode& parent = nodes_[w.node];
      parent.feature = static_cast<std::int32_t>(best.feature);
      parent.threshold = best.threshold;
      parent.left = left;
      parent.right = right;
      const std::size_t mid = w.begin + (split - w.begin);
      stack.push_back({right, mid, w.end});
      stack.push_back({left, w.begin, mid});
    }
    return std::move(nodes_);
  }

private:
  void partition(std::vector<std::uint32_t>& ord, std::size_t begin, std::size_t end) {
    std::size_t l = begin;
    std::size_t r = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = ord[i];
      if (goes_left_[row]) {
        ord[l++] = row;
      } else {
        scratch_[r++] = row;
      }
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r), ord.begin() + static_cast<std::ptrdiff_t>(l));
  }

  void evaluate(std::size_t f, std::size_t begin, std::size_t end, double tn, double ta, Candidate& best) const {
    const auto& ord = order_[f];
    double ln = 0, la = 0;
    for (std::size_t i = begin; i + 1 < end; ++i) {
      const auto r = ord[i];
      (attack_[r] ? la : ln) += weight_[r];
      const double v = X_(r, f);
      const double next = X_(ord[i + 1], f);
      if (!(v < next)) continue;
      const double cost = children_cost(ln, la, tn - ln, ta - la);
      if (!best.valid || cost < best.cost) {
        double thr = v + (next - v) / 2.0;
        if (thr >= next || thr < v) thr = v;
        best = Candidate{true, f, thr, cost};
      }
    }
  }

  Candidate choose_split(std::size_t begin, std::size_t end) {
    double tn = 0, ta = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = order_[0][i];
      (attack_[r] ? ta : tn) += weight_[r];
    }
    std::vector<std::size_t> feats(features_);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    const std::size_t m = params_.max_features;
    Candidate best;
    if (m == 0 || m >= features_ || rng_ == nullptr) {
      for (auto f : feats) evaluate(f, begin, end, tn, ta, best);
      return best;
    }
    for (std::size_t i = 0; i < m; ++i) std::swap(feats[i], feats[i + rng_->index(features_ - i)]);
    std::vector<std::size_t> drawn(feats.begin(), feats.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(drawn.begin(), drawn.end());
    for (auto f : drawn) evaluate(f, begin, end, tn, ta, best);
    if (best.valid) return best;
    // None of the drawn features can split this node; fall back to the rest.
    std::vector<std::size_t> rest(feats.begin() + static_cast<std::ptrdiff_t>(m), feats.end());
    std::sort(rest.begin(), rest.end());
    for (auto f : rest) evaluate(f, begin, end, tn, ta, best);
    return best;
  }

  const Matrix& X_;
  TreeParams params_;
  Rng* rng_;
  std::size_t features_;
  std::vector<double> weight_;
  std::vector<std::uint8_t> attack_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<TreeNode> nodes_;
};

} // namespace

DecisionTree DecisionTree::fit(const Matrix& X, std::span<const ClassLabel> y, const TreeParams& params, Rng* rng,
                               std::span<const std::uint32_t> counts, const Presort* presort) {
  if (X.rows() != y.size()) throw Error(Errc::DimensionMismatch, "feature rows and labels differ in length");
  if (!counts.empty() && counts.size() != X.rows()) throw Error(Errc::DimensionMismatch, "sample counts length");
  if (X.rows() == 0) throw Error(Errc::TooFewRows, "decision tree needs training rows");
  Presort local;
  if (presort == nullptr) {
    local = Presort::build(X);
    presort = &local;
  }
  TreeBuilder builder(X, y, params, rng, counts, *presort);
  DecisionTree tree;
  tree.nodes_ = builder.build();
  tree.arity_ = X.cols();
  return tree;
}

DecisionTree DecisionTree::from_nodes(std::vector<TreeNode> nodes, std::size_t arity) {
  if (nodes.empty()) throw Error(Errc::DimensionMismatch, "tree without nodes");
  for (const auto& n : nodes) {
    if (n.is_leaf()) continue;
    if (static_cast<std::size_t>(n.feature) >= arity || n.left >= nodes.size() || n.right >= nodes.size()) {
      throw Error(Errc::DimensionMismatch, "tree node references out of range");
    }
  }
  DecisionTree t;
  t.nodes_ = std::move(nodes);
  t.arity_ = arity;
  return t;
}

std::size_t DecisionTree::leaf_index(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return i;
}

double DecisionTree::predict_score(std::span<const double> row) const {
  if (row.size() != arity_) throw Error(Errc::ArityMismatch, "row width differs from tree arity");
  return nodes_[leaf_index(row)].attack_fraction;
}

std::vector<double> DecisionTree::impurity_decrease() const {
  std::vector<double> out(arity_, 0.0);
  for (const auto& n : nodes_) {
    if (n.is_leaf()) continue;
    const auto& l = nodes_[n.left];
    const auto& r = nodes_[n.right];
    out[static_cast<std::size_t>(n.feature)] += n.weight * n.impurity - l.weight * l.impurity - r.weight * r.impurity;
  }
  return out;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes_[i].is_leaf()) {
      stack.push_back({nodes_[i].left, d + 1});
      stack.push_back({nodes_[i].right, d + 1});
    }
  }
  return best;
}

RandomForest RandomForest::fit(const Matrix& X, std::span<const ClassLabel> y, const ForestParams& params,
                               std::uint64_t seed) {
  if (X.rows() != y.size()) throw Error(Errc::DimensionMismatch, "feature rows and labels differ in length");
  if (params.trees == 0) throw Error(Errc::InvalidConfig, "forest needs at least one tree");
  const std::size_t n = X.rows();
  TreeParams tp;
  tp.max_features = params.max_features != 0
                        ? params.max_features
                        : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(X.cols()))));
  const Presort presort = Presort::build(X);

  auto grow = [&](std::size_t t) {
    Rng rng = Rng::derive(seed, t);
    std::vector<std::uint32_t> counts;
    if (params.bootstrap) {
      counts.assign(n, 0);
      for (std::size_t i = 0; i < n; ++i) ++counts[rng.index(n)];
    }
    return DecisionTree::fit(X, y, tp, &rng, counts, &presort);
  };

  RandomForest forest;
  forest.trees_.resize(params.trees);
  const std::size_t workers = std::min<std::size_t>(params.trees, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t t = 0; t < params.trees; ++t) forest.trees_[t] = grow(t);
    return forest;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t t = w; t < params.trees; t += workers) forest.trees_[t] = grow(t);
    }));
  }
  for (auto& j : jobs) j.get();
  return forest;
}

RandomForest RandomForest::from_trees(std::vector<DecisionTree> trees) {
  if (trees.empty()) throw Error(Errc::DimensionMismatch, "forest without trees");
  RandomForest f;
  f.trees_ = std::move(trees);
  return f;
}

double RandomForest::predict_score(std::span<const double> row) const {
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict_score(row);
  return s / static_cast<double>(trees_.size());
}

std::vector<double> tree_feature_importance(std::span<const DecisionTree> trees) {
  if (trees.empty()) return {};
  const std::size_t arity = trees.front().arity();
  std::vector<double> total(arity, 0.0);
  for (const auto& t : trees) {
    auto dec = t.impurity_decrease();
    const double s = std::accumulate(dec.begin(), dec.end(), 0.0);
    if (s <= 0) continue;
    for (std::size_t f = 0; f < arity; ++f) total[f] += dec[f] / s;
  }
  const double s = std::accumulate(total.begin(), total.end(), 0.0);
  if (s > 0) {
    for (auto& v : total) v /= s;
  }
  return total;
}

} // namespace iotddos
