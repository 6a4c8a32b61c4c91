#pragma once

#include "hsi/baselines.hpp"
#include "hsi/data.hpp"
#include "hsi/mlp.hpp"
#include "hsi/svm.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace hsi {

struct SvmHead {
  SvmTrainConfig config;
};
struct KnnHead {
  std::size_t k = 5;
};
struct TreeHead {
  TreeConfig config;
};
struct ForestHead {
  ForestConfig config;
};

using HeadKind = std::variant<SvmHead, KnnHead, TreeHead, ForestHead>;

using TrainedHead = std::variant<MulticlassSvm, KnnModel, Tree, Forest>;

std::string head_name(const HeadKind& kind);  // "svm", "knn", "tree", "forest"

// Train a head on any feature matrix (raw spectra or hidden features).
TrainedHead fit_head(const Matrix& x, std::span<const int> labels, int num_classes, const HeadKind& kind,
                     unsigned threads = 1);
int head_predict(const TrainedHead& head, std::span<const double> x);
std::size_t head_input_dim(const TrainedHead& head);

struct HybridModel {
  MlpModel mlp;
  TrainedHead head;
};

// Maps every row through the MLP's hidden layers; labels, coords and class
// count carry over.
SampleSet transform_dataset(const MlpModel& mlp, const SampleSet& samples);

struct HybridOptions {
  // Draw a fresh stratified split on the transformed samples for the head
  // stage instead of reusing `split`. Leaks MLP training pixels into the
  // head's test set; kept only for comparison runs.
  bool paper_literal_resplit = false;
  double split_fraction = 0.8;
  unsigned threads = 1;
};

struct HybridFit {
  HybridModel model;
  std::vector<double> mlp_loss_history;
  SplitIndices head_split;  // the partition the head was trained on
};

// The split used by the head stage: `split` itself, or a fresh one drawn
// with seed split.seed + 1 when paper_literal_resplit is set.
SplitIndices head_split_for(const SampleSet& samples, const SplitIndices& split, const HybridOptions& options);

// Stage 1: MLP on split.train. Stage 2: head on the transformed train rows.
HybridFit fit_hybrid(const SampleSet& samples, const SplitIndices& split, std::span<const std::size_t> layer_sizes,
                     const MlpTrainConfig& mlp_config, const HeadKind& head, const HybridOptions& options = {});

// Stage 2 only, on a frozen MLP.
HybridModel fit_hybrid_head(const MlpModel& mlp, const SampleSet& samples, const SplitIndices& head_split,
                            const HeadKind& head, unsigned threads = 1);

int hybrid_predict(const HybridModel& model, std::span<const double> x);

// "HYB1": MLP blob and head blob, each u64 length-prefixed, head tagged by kind.
std::vector<std::byte> save_hybrid(const HybridModel& model);
HybridModel load_hybrid(std::span<const std::byte> bytes);

}  // namespace hsi
