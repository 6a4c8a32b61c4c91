#include "hsi/baselines.hpp"
#include "hsi/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <map>

using namespace hsi;

namespace {

std::pair<Matrix, std::vector<int>> random_set(Rng& rng, std::size_t n, std::size_t d, int classes, bool grid = false) {
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          grid ? static_cast<double>(rng.below(4)) : rng.normal();
    y[i] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  }
  return {x, y};
}

std::pair<Matrix, std::vector<int>> three_blobs(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  const double centres[3][2] = {{0, 0}, {5, 0}, {0, 5}};
  Matrix x(static_cast<Eigen::Index>(3 * per_class), 2);
  std::vector<int> y;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      const auto r = static_cast<Eigen::Index>(y.size());
      x(r, 0) = centres[c][0] + 0.6 * rng.normal();
      x(r, 1) = centres[c][1] + 0.6 * rng.normal();
      y.push_back(c + 1);
    }
  return {x, y};
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("knn by hand") {
  Matrix x(4, 1);
  x << 0, 1, 2, 10;
  const auto m1 = make_knn(x, {1, 1, 2, 3}, 1);
  const std::vector<double> q10{10}, q1{1.2};
  CHECK(knn_predict(m1, q10) == 3);
  const auto m3 = make_knn(x, {1, 1, 2, 3}, 3);
  CHECK(knn_predict(m3, q1) == 1);
  CHECK_THROWS_AS(make_knn(x, {1, 1, 2, 3}, 5), Error);
  CHECK_THROWS_AS(make_knn(Matrix(0, 1), {}, 1), Error);
}

TEST_CASE("knn matches the sort-everything oracle") {
  Rng rng(30);
  for (int set = 0; set < 5; ++set) {
    // Grid-valued features force distance and vote ties.
    const bool grid = set % 2 == 1;
    auto [x, y] = random_set(rng, 30, 3, 4, grid);
    for (std::size_t k : {1, 3, 4, 7}) {
      const auto model = make_knn(x, y, k);
      for (int q = 0; q < 30; ++q) {
        std::vector<double> query(3);
        for (auto& v : query) v = grid ? static_cast<double>(rng.below(4)) : rng.normal();
        CHECK(knn_predict(model, query) == oracle::knn(x, y, k, query));
      }
    }
  }
}

TEST_CASE("knn with k = n returns the global majority") {
  Rng rng(4);
  auto [x, y] = random_set(rng, 15, 2, 3);
  std::map<int, int> counts;
  for (int l : y) ++counts[l];
  int majority = 0, best = -1;
  for (auto [l, c] : counts)
    if (c > best) majority = l, best = c;
  const auto model = make_knn(x, y, 15);
  for (int q = 0; q < 10; ++q) {
    const std::vector<double> query{rng.normal(), rng.normal()};
    CHECK(knn_predict(model, query) == majority);
  }
}

TEST_CASE("gini") {
  CHECK(gini(std::vector<int>{3, 3, 3}) == 0.0);
  CHECK(gini(std::vector<int>{1, 1, 2, 2}) == 0.5);
  CHECK(gini(std::vector<int>{1, 2, 3, 4, 5}) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(gini(std::vector<int>{}), Error);
}

TEST_CASE("tree: single midpoint split") {
  Matrix x(4, 1);
  x << 0, 1, 10, 11;
  const std::vector<int> y{1, 1, 2, 2};
  const auto t = build_tree(x, y);
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[0].feature == 0);
  CHECK(t.nodes[0].threshold == 5.5);
  CHECK(t.depth() == 1);
  CHECK(t.leaf_count() == 2);
}

TEST_CASE("tree: pure input is a single leaf") {
  const auto t = build_tree(Matrix::Random(5, 2), std::vector<int>{2, 2, 2, 2, 2});
  REQUIRE(t.nodes.size() == 1);
  CHECK(t.nodes[0].is_leaf());
  CHECK(t.nodes[0].label == 2);
}

TEST_CASE("tree root split equals exhaustive search") {
  Rng rng(8);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(7), d = 1 + rng.below(2);
    auto [x, y] = random_set(rng, n, d, 3, trial % 3 == 0);
    const auto want = oracle::exhaustive_split(x, y);
    const auto tree = build_tree(x, y);
    if (want.feature < 0 || oracle::gini(y) == 0.0) {
      CHECK(tree.nodes.size() == 1);
      continue;
    }
    REQUIRE(!tree.nodes[0].is_leaf());
    CHECK(tree.nodes[0].feature == want.feature);
    CHECK(tree.nodes[0].threshold == want.threshold);
    ++compared;
  }
  CHECK(compared > 100);
}

TEST_CASE("fully grown trees memorize consistent data") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    auto [x, y] = random_set(rng, 40, 3, 4);
    const auto t = build_tree(x, y, {1000, 2, 0, 0});
    std::map<std::size_t, int> leaf_label;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto leaf = tree_leaf(t, row_span(x, i));
      CHECK(t.nodes[leaf].is_leaf());
      CHECK(t.nodes[leaf].label == y[static_cast<std::size_t>(i)]);
      CHECK(tree_predict(t, row_span(x, i)) == y[static_cast<std::size_t>(i)]);
    }
    CHECK(save_tree(load_tree(save_tree(t))) == save_tree(t));
  }
}

TEST_CASE("tree depth limit") {
  Rng rng(13);
  auto [x, y] = random_set(rng, 60, 2, 3);
  CHECK(build_tree(x, y, {2, 2, 0, 0}).depth() <= 2);
}

TEST_CASE("forest: one unbagged tree with all features is the tree") {
  Rng rng(14);
  auto [x, y] = random_set(rng, 50, 3, 3);
  ForestConfig fc;
  fc.n_trees = 1;
  fc.bootstrap = false;
  fc.m_try = 3;
  const auto f = train_forest(x, y, fc);
  const auto t = build_tree(x, y);
  for (int q = 0; q < 40; ++q) {
    const std::vector<double> query{rng.normal(), rng.normal(), rng.normal()};
    CHECK(forest_predict(f, query) == tree_predict(t, query));
  }
}

TEST_CASE("forest: determinism, accuracy, votes") {
  const auto [x, y] = three_blobs(40, 1);
  const auto [xt, yt] = three_blobs(30, 2);
  ForestConfig fc;
  fc.n_trees = 25;
  const auto f = train_forest(x, y, fc);
  CHECK(save_forest(train_forest(x, y, fc, 4)) == save_forest(f));
  CHECK(save_forest(load_forest(save_forest(f))) == save_forest(f));

  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < xt.rows(); ++i) {
    const auto votes = forest_votes(f, row_span(xt, i));
    std::size_t total = 0;
    for (auto v : votes) total += v;
    CHECK(total == f.trees.size());
    std::vector<std::size_t> manual(3, 0);
    for (const auto& t : f.trees) ++manual[static_cast<std::size_t>(tree_predict(t, row_span(xt, i)) - 1)];
    manual.resize(votes.size());
    CHECK(manual == votes);
    correct += forest_predict(f, row_span(xt, i)) == yt[static_cast<std::size_t>(i)];
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(xt.rows()) >= 0.95);
}

TEST_CASE("forest vote ties go to the smaller class") {
  Forest f;
  for (int label : {2, 1, 2, 1}) {
    Tree t;
    t.num_features = 1;
    t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, label});
    f.trees.push_back(t);
  }
  const std::vector<double> q{0.0};
  CHECK(forest_predict(f, q) == 1);
  f.trees.pop_back();
  CHECK(forest_predict(f, q) == 2);
}

TEST_CASE("knn bytes round-trip") {
  Rng rng(1);
  auto [x, y] = random_set(rng, 10, 2, 2);
  const auto m = make_knn(x, y, 3);
  CHECK(save_knn(load_knn(save_knn(m))) == save_knn(m));
}

}  // TEST_SUITE
