#include "hsi/hybrid.hpp"

#include "byte_io.hpp"
#include "hsi/error.hpp"

#include <string>

namespace hsi {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

enum HeadTag : std::uint32_t { kSvm = 0, kKnn = 1, kTree = 2, kForest = 3 };

}  // namespace

std::string head_name(const HeadKind& kind) {
  return std::visit(overloaded{[](const SvmHead&) { return std::string("svm"); },
                               [](const KnnHead&) { return std::string("knn"); },
                               [](const TreeHead&) { return std::string("tree"); },
                               [](const ForestHead&) { return std::string("forest"); }},
                    kind);
}

TrainedHead fit_head(const Matrix& x, std::span<const int> labels, int num_classes, const HeadKind& kind,
                     unsigned threads) {
  return std::visit(
      overloaded{
          [&](const SvmHead& h) -> TrainedHead { return train_one_vs_rest(x, labels, num_classes, h.config, threads); },
          [&](const KnnHead& h) -> TrainedHead {
            return make_knn(x, std::vector<int>(labels.begin(), labels.end()), h.k);
          },
          [&](const TreeHead& h) -> TrainedHead { return build_tree(x, labels, h.config); },
          [&](const ForestHead& h) -> TrainedHead { return train_forest(x, labels, h.config, threads); }},
      kind);
}

int head_predict(const TrainedHead& head, std::span<const double> x) {
  return std::visit(overloaded{[&](const MulticlassSvm& m) { return predict_multiclass(m, x); },
                               [&](const KnnModel& m) { return knn_predict(m, x); },
                               [&](const Tree& m) { return tree_predict(m, x); },
                               [&](const Forest& m) { return forest_predict(m, x); }},
                    head);
}

std::size_t head_input_dim(const TrainedHead& head) {
  return std::visit(overloaded{[](const MulticlassSvm& m) { return input_dim(m.machines.front()); },
                               [](const KnnModel& m) { return static_cast<std::size_t>(m.x.cols()); },
                               [](const Tree& m) { return m.num_features; },
                               [](const Forest& m) { return m.trees.front().num_features; }},
                    head);
}

SampleSet transform_dataset(const MlpModel& mlp, const SampleSet& samples) {
  SampleSet out;
  out.features = hidden_features(mlp, samples.features);
  out.labels = samples.labels;
  out.coords = samples.coords;
  out.patch_size = samples.patch_size;
  out.num_classes = samples.num_classes;
  return out;
}

SplitIndices head_split_for(const SampleSet& samples, const SplitIndices& split, const HybridOptions& options) {
  if (!options.paper_literal_resplit) return split;
  return split_samples(samples, options.split_fraction, split.seed + 1);
}

HybridModel fit_hybrid_head(const MlpModel& mlp, const SampleSet& samples, const SplitIndices& head_split,
                            const HeadKind& head, unsigned threads) {
  // Only the head's training rows are ever mapped or read.
  const Matrix train_x = hidden_features(mlp, select_rows(samples.features, head_split.train));
  const auto train_y = select(samples.labels, head_split.train);
  return HybridModel{mlp, fit_head(train_x, train_y, samples.num_classes, head, threads)};
}

HybridFit fit_hybrid(const SampleSet& samples, const SplitIndices& split, std::span<const std::size_t> layer_sizes,
                     const MlpTrainConfig& mlp_config, const HeadKind& head, const HybridOptions& options) {
  if (layer_sizes.empty() || layer_sizes.front() != static_cast<std::size_t>(samples.features.cols()))
    throw Error(ErrorCode::DimensionMismatch, "first layer width must equal the sample feature width");
  const Matrix train_x = select_rows(samples.features, split.train);
  const auto train_y = select(samples.labels, split.train);
  auto mlp = train_mlp(init_mlp(layer_sizes, mlp_config.seed), train_x, train_y, mlp_config);

  HybridFit fit;
  fit.head_split = head_split_for(samples, split, options);
  fit.model = fit_hybrid_head(mlp.model, samples, fit.head_split, head, options.threads);
  fit.mlp_loss_history = std::move(mlp.loss_history);
  return fit;
}

int hybrid_predict(const HybridModel& model, std::span<const double> x) {
  const Vector h = hidden_features(model.mlp, x);
  return head_predict(model.head, {h.data(), static_cast<std::size_t>(h.size())});
}

std::vector<std::byte> save_hybrid(const HybridModel& model) {
  detail::ByteWriter w;
  w.magic("HYB1");
  w.blob(save_mlp(model.mlp));
  std::visit(overloaded{[&](const MulticlassSvm& m) { w.u32(kSvm); w.blob(save_svm(m)); },
                        [&](const KnnModel& m) { w.u32(kKnn); w.blob(save_knn(m)); },
                        [&](const Tree& m) { w.u32(kTree); w.blob(save_tree(m)); },
                        [&](const Forest& m) { w.u32(kForest); w.blob(save_forest(m)); }},
             model.head);
  return w.take();
}

HybridModel load_hybrid(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("HYB1");
  HybridModel model;
  model.mlp = load_mlp(r.blob());
  const auto tag = r.u32();
  const auto blob = r.blob();
  switch (tag) {
    case kSvm: model.head = load_svm(blob); break;
    case kKnn: model.head = load_knn(blob); break;
    case kTree: model.head = load_tree(blob); break;
    case kForest: model.head = load_forest(blob); break;
    default: throw Error(ErrorCode::CorruptModel, "unknown head tag " + std::to_string(tag));
  }
  r.expect_done();
  if (head_input_dim(model.head) != model.mlp.hidden_width())
    throw Error(ErrorCode::CorruptModel, "head input width does not match the MLP's last hidden layer");
  return model;
}

}  // namespace hsi
