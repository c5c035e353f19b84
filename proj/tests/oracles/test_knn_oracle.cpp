#include "iotddos/kdtree.hpp"
#include "iotddos/model.hpp"

#include "../support/test_data.hpp"

#include <doctest.h>

#include <algorithm>
#include <vector>

using namespace iotddos;

namespace {

std::vector<Neighbor> linear_scan(const Matrix& pts, std::span<const double> q, std::size_t k) {
  std::vector<Neighbor> all;
  all.reserve(pts.rows());
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    double d = 0;
    for (std::size_t c = 0; c < pts.cols(); ++c) {
      const double x = pts(i, c) - q[c];
      d += x * x;
    }
    all.push_back({i, d});
  }
  std::sort(all.begin(), all.end());
  all.resize(std::min(k, all.size()));
  return all;
}

double vote(const std::vector<Neighbor>& nn, const std::vector<ClassLabel>& y) {
  double a = 0;
  for (const auto& n : nn) a += y[n.index] == ClassLabel::Attack ? 1.0 : 0.0;
  return a / static_cast<double>(nn.size());
}

} // namespace

TEST_SUITE("oracle.knn") {

TEST_CASE("kd-tree neighbours equal a linear scan on 500 queries") {
  for (std::size_t leaf : {1u, 4u, 16u, 64u}) {
    auto train = testing::toy_data(3000, 11, 100 + leaf);
    auto queries = testing::toy_data(500, 11, 200 + leaf);
    KdTree tree(train.X, leaf);
    for (std::size_t q = 0; q < 500; ++q) {
      for (std::size_t k : {1u, 5u, 17u}) {
        auto got = tree.knn(queries.X.row(q), k);
        auto want = linear_scan(train.X, queries.X.row(q), k);
        REQUIRE(got == want);
      }
    }
  }
}

TEST_CASE("duplicate-heavy data still matches, ties broken by index") {
  Rng rng(7);
  Matrix pts(2000, 3);
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) pts(i, c) = static_cast<double>(rng.uniform_int(0, 3));
  }
  KdTree tree(pts, 8);
  for (int q = 0; q < 500; ++q) {
    std::vector<double> query{static_cast<double>(rng.uniform_int(0, 4)), static_cast<double>(rng.uniform_int(0, 4)),
                              rng.uniform(-1, 5)};
    REQUIRE(tree.knn(query, 5) == linear_scan(pts, query, 5));
  }
}

TEST_CASE("knn classifier votes equal brute-force votes") {
  auto train = testing::toy_data(2500, 11, 300);
  auto test = testing::toy_data(500, 11, 301);
  auto model = fit(ModelKind::KN, train.X, train.y, Hyperparameters{}, 1);
  const auto& scaler = *model.scaler();
  const Matrix scaled_train = apply_scaler(scaler, train.X);
  const Matrix scaled_test = apply_scaler(scaler, test.X);
  for (std::size_t q = 0; q < test.X.rows(); ++q) {
    const double want = vote(linear_scan(scaled_train, scaled_test.row(q), 5), train.y);
    REQUIRE(model.predict_score(test.X.row(q)) == want);
    REQUIRE(model.predict(test.X.row(q)) == label_from_score(want));
  }
}

}
