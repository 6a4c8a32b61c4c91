#pragma once

#include "hsi/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hsi {

// ---------------------------------------------------------------------------
// K-nearest neighbors

struct KnnModel {
  Matrix x;
  std::vector<int> y;
  std::size_t k = 5;
};

KnnModel make_knn(Matrix x, std::vector<int> y, std::size_t k = 5);

// Majority label among the k nearest training rows (Euclidean). Distance
// ties go to the smaller training index, vote ties to the smaller class id.
int knn_predict(const KnnModel& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// CART decision tree

double gini(std::span<const int> labels);

// Flat node array; node 0 is the root. feature < 0 marks a leaf.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  int label = 0;           // majority class of the node's training subset

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::size_t num_features = 0;

  std::size_t depth() const;
  std::size_t leaf_count() const;
};

struct TreeConfig {
  std::size_t max_depth = 20;
  std::size_t min_samples_split = 2;
  // Features examined per split; 0 means all of them.
  std::size_t feature_subset = 0;
  std::uint64_t seed = 0;
};

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  // size-weighted Gini of the two children
};

// Best split of (x, y) restricted to `rows` and `features`: lowest weighted
// child Gini over midpoints of consecutive distinct values, ties to the
// smaller feature index and then the smaller threshold.
SplitChoice best_split(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                       std::span<const std::size_t> features);

Tree build_tree(const Matrix& x, std::span<const int> y, const TreeConfig& config = {});

// Index of the leaf that x lands in.
std::size_t tree_leaf(const Tree& tree, std::span<const double> x);
int tree_predict(const Tree& tree, std::span<const double> x);

// ---------------------------------------------------------------------------
// Random forest

struct ForestConfig {
  std::size_t n_trees = 50;
  std::size_t max_depth = 20;
  std::size_t min_samples_split = 2;
  std::size_t m_try = 0;  // 0 means round(sqrt(d))
  bool bootstrap = true;
  std::uint64_t seed = 42;
};

struct Forest {
  std::vector<Tree> trees;
  std::size_t m_try = 0;
  std::uint64_t seed = 0;
};

Forest train_forest(const Matrix& x, std::span<const int> y, const ForestConfig& config,
                    unsigned threads = 1);

// Per-class vote counts (index c - 1 holds class c) and the majority.
std::vector<std::size_t> forest_votes(const Forest& forest, std::span<const double> x);
int forest_predict(const Forest& forest, std::span<const double> x);

// ---------------------------------------------------------------------------
// Persistence ("KNN1", "TREE", "FRST")

std::vector<std::byte> save_knn(const KnnModel& model);
KnnModel load_knn(std::span<const std::byte> bytes);
std::vector<std::byte> save_tree(const Tree& tree);
Tree load_tree(std::span<const std::byte> bytes);
std::vector<std::byte> save_forest(const Forest& forest);
Forest load_forest(std::span<const std::byte> bytes);

}  // namespace hsi
