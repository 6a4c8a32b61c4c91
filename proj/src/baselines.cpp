#include "hsi/baselines.hpp"

#include "byte_io.hpp"
#include "hsi/error.hpp"
#include "hsi/parallel.hpp"
#include "hsi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace hsi {

namespace {

void check_dim(std::size_t got, std::size_t want) {
  if (got != want)
    throw Error(ErrorCode::DimensionMismatch, "query has " + std::to_string(got) +
                                                  " features, model expects " + std::to_string(want));
}

// Most frequent label; ties to the smaller class id.
template <typename Counts>
int majority(const Counts& counts) {
  int best = 0;
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts) {
    if (count > best_count || (count == best_count && label < best)) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

int majority_of(std::span<const int> y, std::span<const std::size_t> rows) {
  std::map<int, std::size_t> counts;
  for (auto r : rows) ++counts[y[r]];
  return majority(counts);
}

double gini_from_counts(const std::vector<std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double sum = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum += p * p;
  }
  return 1.0 - sum;
}

constexpr double kImpurityEps = 1e-12;

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, const TreeConfig& config)
      : x_(x), y_(y), config_(config), rng_(config.seed) {
    tree_.num_features = static_cast<std::size_t>(x.cols());
  }

  Tree build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> rows, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[static_cast<std::size_t>(id)].label = majority_of(y_, rows);

    const bool pure = std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return y_[r] == y_[rows.front()]; });
    if (pure || depth >= config_.max_depth || rows.size() < std::max<std::size_t>(2, config_.min_samples_split))
      return id;

    const auto features = pick_features();
    const SplitChoice split = best_split(x_, y_, rows, features);
    if (!split.found) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      if (x_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold) left.push_back(r);
      else right.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::vector<std::size_t> pick_features() {
    const std::size_t d = tree_.num_features;
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const std::size_t m = config_.feature_subset;
    if (m == 0 || m >= d) return all;
    // Partial Fisher-Yates, then sorted so split ties stay index-ordered.
    for (std::size_t i = 0; i < m; ++i) std::swap(all[i], all[i + rng_.below(d - i)]);
    all.resize(m);
    std::sort(all.begin(), all.end());
    return all;
  }

  const Matrix& x_;
  std::span<const int> y_;
  TreeConfig config_;
  Rng rng_;
  Tree tree_;
};

}  // namespace

// ---------------------------------------------------------------------------
// KNN

KnnModel make_knn(Matrix x, std::vector<int> y, std::size_t k) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "KNN needs training data");
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw Error(ErrorCode::DimensionMismatch, "features and labels differ in length");
  if (k == 0 || k > y.size())
    throw Error(ErrorCode::BadConfig, "k must lie in [1, " + std::to_string(y.size()) + "]");
  return KnnModel{std::move(x), std::move(y), k};
}

int knn_predict(const KnnModel& model, std::span<const double> x) {
  check_dim(x.size(), static_cast<std::size_t>(model.x.cols()));
  const auto q = as_vector(x);
  const auto n = static_cast<std::size_t>(model.x.rows());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i)
    dist[i] = {(model.x.row(static_cast<Eigen::Index>(i)).transpose() - q).squaredNorm(), i};
  const std::size_t k = std::min(model.k, n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
  std::map<int, std::size_t> votes;
  for (std::size_t i = 0; i < k; ++i) ++votes[model.y[dist[i].second]];
  return majority(votes);
}

// ---------------------------------------------------------------------------
// Trees

double gini(std::span<const int> labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptyInput, "gini of an empty set");
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  double sum = 0.0;
  for (const auto& [label, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(labels.size());
    sum += p * p;
  }
  return 1.0 - sum;
}

SplitChoice best_split(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                       std::span<const std::size_t> features) {
  SplitChoice best;
  if (rows.size() < 2) return best;
  // Dense class index for the labels present.
  std::vector<int> classes;
  for (auto r : rows) classes.push_back(y[r]);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  auto class_index = [&](int label) {
    return static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin());
  };

  std::vector<std::size_t> total(classes.size(), 0);
  for (auto r : rows) ++total[class_index(y[r])];
  const std::size_t n = rows.size();
  std::vector<std::pair<double, std::size_t>> sorted(n);
  std::vector<std::size_t> left(classes.size()), right(classes.size());

  for (auto f : features) {
    for (std::size_t i = 0; i < n; ++i)
      sorted[i] = {x(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(f)), rows[i]};
    std::sort(sorted.begin(), sorted.end());
    std::fill(left.begin(), left.end(), 0);
    right = total;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto c = class_index(y[sorted[i].second]);
      ++left[c];
      --right[c];
      const double v = sorted[i].first, next = sorted[i + 1].first;
      if (!(next > v)) continue;
      const std::size_t nl = i + 1, nr = n - nl;
      const double impurity = (static_cast<double>(nl) * gini_from_counts(left, nl) +
                               static_cast<double>(nr) * gini_from_counts(right, nr)) /
                              static_cast<double>(n);
      if (!best.found || impurity < best.impurity - kImpurityEps) {
        double threshold = 0.5 * (v + next);
        if (!(threshold < next)) threshold = v;
        best = {true, static_cast<int>(f), threshold, impurity};
      }
    }
  }
  return best;
}

Tree build_tree(const Matrix& x, std::span<const int> y, const TreeConfig& config) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "cannot grow a tree on no data");
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw Error(ErrorCode::DimensionMismatch, "features and labels differ in length");
  std::vector<std::size_t> rows(y.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return TreeBuilder(x, y, config).build(std::move(rows));
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t out = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out = std::max(out, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return out;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t tree_leaf(const Tree& tree, std::span<const double> x) {
  check_dim(x.size(), tree.num_features);
  std::size_t i = 0;
  while (!tree.nodes[i].is_leaf()) {
    const auto& n = tree.nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

int tree_predict(const Tree& tree, std::span<const double> x) { return tree.nodes[tree_leaf(tree, x)].label; }

// ---------------------------------------------------------------------------
// Forest

Forest train_forest(const Matrix& x, std::span<const int> y, const ForestConfig& config, unsigned threads) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "cannot grow a forest on no data");
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw Error(ErrorCode::DimensionMismatch, "features and labels differ in length");
  if (config.n_trees == 0) throw Error(ErrorCode::BadConfig, "a forest needs at least one tree");

  const auto d = static_cast<std::size_t>(x.cols());
  Forest forest;
  forest.seed = config.seed;
  forest.m_try = config.m_try ? std::min(config.m_try, d)
                              : std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d)))));
  forest.trees.resize(config.n_trees);
  const auto n = static_cast<std::size_t>(x.rows());

  parallel_for(config.n_trees, [&](std::size_t t) {
    const std::uint64_t tree_seed = Rng::derive(config.seed, t);
    Rng rng(tree_seed);
    std::vector<std::size_t> rows(n);
    if (config.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    TreeConfig tc{config.max_depth, config.min_samples_split, forest.m_try, rng.next()};
    forest.trees[t] = TreeBuilder(x, y, tc).build(std::move(rows));
  }, threads);
  return forest;
}

std::vector<std::size_t> forest_votes(const Forest& forest, std::span<const double> x) {
  std::vector<std::size_t> votes;
  for (const auto& tree : forest.trees) {
    const int label = tree_predict(tree, x);
    if (static_cast<std::size_t>(label) > votes.size()) votes.resize(static_cast<std::size_t>(label), 0);
    ++votes[static_cast<std::size_t>(label - 1)];
  }
  return votes;
}

int forest_predict(const Forest& forest, std::span<const double> x) {
  const auto votes = forest_votes(forest, x);
  std::size_t best = 0;
  for (std::size_t i = 1; i < votes.size(); ++i)
    if (votes[i] > votes[best]) best = i;
  return static_cast<int>(best) + 1;
}

// ---------------------------------------------------------------------------
// Persistence

std::vector<std::byte> save_knn(const KnnModel& m) {
  detail::ByteWriter w;
  w.magic("KNN1");
  w.u32(static_cast<std::uint32_t>(m.k));
  w.u32(static_cast<std::uint32_t>(m.x.rows()));
  w.u32(static_cast<std::uint32_t>(m.x.cols()));
  for (Eigen::Index i = 0; i < m.x.size(); ++i) w.f64(m.x.data()[i]);
  for (int l : m.y) w.i32(l);
  return w.take();
}

KnnModel load_knn(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("KNN1");
  const auto k = r.u32();
  const auto n = r.u32();
  const auto d = r.u32();
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = r.f64();
  std::vector<int> y(n);
  for (auto& l : y) l = r.i32();
  r.expect_done();
  return make_knn(std::move(x), std::move(y), k);
}

namespace {

void write_tree(detail::ByteWriter& w, const Tree& t) {
  w.magic("TREE");
  w.u32(static_cast<std::uint32_t>(t.num_features));
  w.u32(static_cast<std::uint32_t>(t.nodes.size()));
  for (const auto& n : t.nodes) {
    w.i32(n.feature);
    w.f64(n.threshold);
    w.i32(n.left);
    w.i32(n.right);
    w.i32(n.label);
  }
}

Tree read_tree(detail::ByteReader& r) {
  r.expect_magic("TREE");
  Tree t;
  t.num_features = r.u32();
  const auto count = r.u32();
  if (count == 0) throw Error(ErrorCode::CorruptModel, "tree without nodes");
  t.nodes.resize(count);
  for (auto& n : t.nodes) {
    n.feature = r.i32();
    n.threshold = r.f64();
    n.left = r.i32();
    n.right = r.i32();
    n.label = r.i32();
  }
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const auto& n = t.nodes[i];
    if (n.is_leaf()) continue;
    const auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(count); };
    if (static_cast<std::size_t>(n.feature) >= t.num_features || !in_range(n.left) || !in_range(n.right))
      throw Error(ErrorCode::CorruptModel, "bad tree node " + std::to_string(i));
  }
  return t;
}

}  // namespace

std::vector<std::byte> save_tree(const Tree& tree) {
  detail::ByteWriter w;
  write_tree(w, tree);
  return w.take();
}

Tree load_tree(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes);
  Tree t = read_tree(r);
  r.expect_done();
  return t;
}

std::vector<std::byte> save_forest(const Forest& forest) {
  detail::ByteWriter w;
  w.magic("FRST");
  w.u32(static_cast<std::uint32_t>(forest.m_try));
  w.u64(forest.seed);
  w.u32(static_cast<std::uint32_t>(forest.trees.size()));
  for (const auto& t : forest.trees) w.blob(save_tree(t));
  return w.take();
}

Forest load_forest(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("FRST");
  Forest f;
  f.m_try = r.u32();
  f.seed = r.u64();
  const auto count = r.u32();
  if (count == 0) throw Error(ErrorCode::CorruptModel, "forest without trees");
  for (std::uint32_t i = 0; i < count; ++i) f.trees.push_back(load_tree(r.blob()));
  r.expect_done();
  return f;
}

}  // namespace hsi
