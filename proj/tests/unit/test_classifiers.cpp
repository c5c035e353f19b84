#include "iotddos/cart.hpp"
#include "iotddos/error.hpp"
#include "iotddos/kdtree.hpp"
#include "iotddos/linear_svm.hpp"
#include "iotddos/model.hpp"
#include "iotddos/neural_net.hpp"

#include "../support/test_data.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace iotddos;

namespace {

double train_accuracy(const TrainedModel& m, const Matrix& X, const std::vector<ClassLabel>& y) {
  auto p = m.predict(X);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += p[i] == y[i] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

Hyperparameters quick() {
  Hyperparameters hp;
  hp.nn.epochs = 30;
  return hp;
}

} // namespace

TEST_SUITE("classifiers") {

TEST_CASE("gini impurity") {
  CHECK(gini_impurity(5, 5) == doctest::Approx(0.5));
  CHECK(gini_impurity(4, 0) == 0.0);
  CHECK(gini_impurity(1, 3) == doctest::Approx(0.375));
  const std::vector<double> three{1, 1, 1};
  CHECK(gini_impurity(three) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(gini_impurity(0, 0), Error);
}

TEST_CASE("tree grows until pure on consistent data") {
  auto d = testing::toy_data(400, 4, 31, 0.0);
  auto t = DecisionTree::fit(d.X, d.y, TreeParams{});
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    const double s = t.predict_score(d.X.row(i));
    const auto& leaf = t.nodes()[t.leaf_index(d.X.row(i))];
    CHECK(leaf.is_leaf());
    if (leaf.impurity == 0.0) CHECK(label_from_score(s) == d.y[i]);
  }
  const auto imp = t.impurity_decrease();
  CHECK(imp.size() == 4);
  CHECK(std::accumulate(imp.begin(), imp.end(), 0.0) > 0.0);
}

TEST_CASE("tree picks the obvious split") {
  Matrix X;
  std::vector<ClassLabel> y;
  for (int i = 0; i < 10; ++i) {
    X.push_row(std::vector<double>{static_cast<double>(i % 3), static_cast<double>(i)});
    y.push_back(i < 5 ? ClassLabel::Normal : ClassLabel::Attack);
  }
  auto t = DecisionTree::fit(X, y, TreeParams{});
  REQUIRE(t.nodes().size() == 3);
  CHECK(t.nodes()[0].feature == 1);
  CHECK(t.nodes()[0].threshold == doctest::Approx(4.5));
  CHECK(t.depth() == 1);
  auto imp = tree_feature_importance(std::span(&t, 1));
  CHECK(imp[0] == 0.0);
  CHECK(imp[1] == doctest::Approx(1.0));
}

TEST_CASE("forest importance sums to one") {
  auto d = testing::toy_data(600, 6, 32);
  auto f = RandomForest::fit(d.X, d.y, ForestParams{}, 5);
  CHECK(f.trees().size() == 10);
  auto imp = tree_feature_importance(f.trees());
  CHECK(std::accumulate(imp.begin(), imp.end(), 0.0) == doctest::Approx(1.0));
  auto again = RandomForest::fit(d.X, d.y, ForestParams{}, 5);
  CHECK(again.trees() == f.trees());
}

TEST_CASE("kd-tree basics") {
  Matrix pts;
  for (int i = 0; i < 5; ++i) pts.push_row(std::vector<double>{static_cast<double>(i), 0.0});
  KdTree t(pts, 1);
  const std::vector<double> q{2.2, 0.0};
  auto nn = t.knn(q, 2);
  REQUIRE(nn.size() == 2);
  CHECK(nn[0].index == 2);
  CHECK(nn[1].index == 3);
  CHECK(t.knn(q, 10).size() == 5);
  const std::vector<double> mid{1.5, 0.0};
  auto tie = t.knn(mid, 1);
  CHECK(tie[0].index == 1);
}

TEST_CASE("linear svm decreases its objective and separates easy data") {
  auto d = testing::toy_data(1000, 11, 33, 0.0);
  Rng rng(1);
  auto s = LinearSvm::fit(d.X, d.y, SvmParams{}, rng);
  const auto& h = s.loss_history();
  REQUIRE(h.size() == SvmParams{}.epochs + 1);
  CHECK(h.back() < h.front());
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    ok += (s.margin(d.X.row(i)) > 0) == (d.y[i] == ClassLabel::Attack) ? 1 : 0;
    CHECK(s.predict_score(d.X.row(i)) == doctest::Approx(1.0 / (1.0 + std::exp(-s.margin(d.X.row(i))))));
  }
  CHECK(static_cast<double>(ok) / 1000.0 > 0.85);
}

TEST_CASE("neural net shapes and training") {
  std::vector<std::size_t> w{4, 11, 11, 11, 1};
  CHECK(NeuralNet::param_count(w) == 4 * 11 + 11 + 2 * (11 * 11 + 11) + 11 + 1);
  Rng rng(2);
  auto net = NeuralNet::glorot(w, rng);
  CHECK(net.arity() == 4);
  auto d = testing::toy_data(800, 4, 34, 0.0);
  std::vector<std::size_t> all(d.y.size());
  std::iota(all.begin(), all.end(), 0);
  NnParams p;
  p.epochs = 20;
  Rng fit_rng(3);
  auto trained = NeuralNet::fit(d.X, d.y, p, fit_rng);
  CHECK(trained.loss(d.X, d.y, all) < net.loss(d.X, d.y, all));
}

TEST_CASE("adam moves parameters against the gradient") {
  NnParams p;
  Adam opt(2, p);
  std::vector<double> theta{1.0, -1.0};
  const std::vector<double> g{0.5, -0.5};
  opt.step(theta, g);
  CHECK(theta[0] < 1.0);
  CHECK(theta[1] > -1.0);
  CHECK(theta[0] == doctest::Approx(1.0 - p.learning_rate).epsilon(1e-3));
}

TEST_CASE("every model kind fits and predicts") {
  auto d = testing::toy_data(600, 11, 35, 0.0);
  for (auto kind : kModelKinds) {
    CAPTURE(display_name(kind));
    auto m = fit(kind, d.X, d.y, quick(), 9);
    CHECK(m.kind() == kind);
    CHECK(m.arity() == 11);
    CHECK(m.scaler().has_value() == uses_scaler(kind));
    CHECK(train_accuracy(m, d.X, d.y) > 0.8);
    const double s = m.predict_score(d.X.row(0));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    if (kind == ModelKind::DT || kind == ModelKind::RF) {
      CHECK(feature_importance(m).size() == 11);
    } else {
      CHECK_THROWS_AS(feature_importance(m), Error);
    }
  }
}

TEST_CASE("model names") {
  for (auto k : kModelKinds) CHECK(model_kind_from_string(to_string(k)) == k);
  CHECK_FALSE(model_kind_from_string("svm").has_value());
  CHECK(label_from_score(0.5) == ClassLabel::Normal);
  CHECK(label_from_score(0.5000001) == ClassLabel::Attack);
}

TEST_CASE("fit validates its input") {
  auto d = testing::toy_data(10, 11, 36);
  std::vector<ClassLabel> short_y(d.y.begin(), d.y.begin() + 5);
  CHECK_THROWS_AS(fit(ModelKind::DT, d.X, short_y, quick(), 1), Error);
  auto m = fit(ModelKind::DT, d.X, d.y, quick(), 1);
  const std::vector<double> narrow(8, 0.0);
  CHECK_THROWS_AS(m.predict_score(narrow), Error);
}

}
