#include "hsi/mlp.hpp"

#include "byte_io.hpp"
#include "hsi/error.hpp"
#include "hsi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hsi {

namespace {

using Batch = Eigen::MatrixXd;

void check_input(const MlpModel& model, std::size_t width) {
  if (width != model.input_dim())
    throw Error(ErrorCode::DimensionMismatch, "input has " + std::to_string(width) +
                                                  " features, model expects " +
                                                  std::to_string(model.input_dim()));
}

// Pre-activations of every layer for a batch (rows are samples), plus the
// post-ReLU activations feeding each layer.
struct BatchPass {
  std::vector<Batch> inputs;  // inputs[k] feeds layer k; inputs[0] is the batch
  Batch logits;
};

BatchPass batch_forward(const MlpModel& model, const Batch& x) {
  BatchPass pass;
  pass.inputs.push_back(x);
  const std::size_t last = model.layers.size() - 1;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& layer = model.layers[k];
    Batch z = pass.inputs.back() * layer.weights.transpose();
    z.rowwise() += layer.biases.transpose();
    if (k == last) {
      pass.logits = std::move(z);
    } else {
      pass.inputs.push_back(z.cwiseMax(0.0));
    }
  }
  return pass;
}

}  // namespace

void validate(const MlpTrainConfig& c) {
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate))
    throw Error(ErrorCode::BadConfig, "learning rate must be non-negative");
  if (c.epochs == 0) throw Error(ErrorCode::BadConfig, "epochs must be positive");
  if (c.batch_size == 0) throw Error(ErrorCode::BadConfig, "batch size must be positive");
  if (!(c.l2 >= 0.0)) throw Error(ErrorCode::BadConfig, "l2 must be non-negative");
}

std::vector<std::size_t> default_layer_sizes(std::size_t input_dim, std::size_t num_classes) {
  return {input_dim, 500, 350, 250, num_classes};
}

MlpModel init_mlp(std::span<const std::size_t> sizes, std::uint64_t seed) {
  if (sizes.size() < 3)
    throw Error(ErrorCode::BadArchitecture, "need input, at least one hidden layer, and output");
  if (std::any_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s == 0; }))
    throw Error(ErrorCode::BadArchitecture, "layer sizes must be positive");
  Rng rng(seed);
  MlpModel model;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const auto in = static_cast<Eigen::Index>(sizes[k]);
    const auto out = static_cast<Eigen::Index>(sizes[k + 1]);
    const double stddev = std::sqrt(2.0 / static_cast<double>(in));
    LayerParams layer{Eigen::MatrixXd(out, in), Vector::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = stddev * rng.normal();
    model.layers.push_back(std::move(layer));
  }
  return model;
}

ForwardPass forward(const MlpModel& model, std::span<const double> x) {
  check_input(model, x.size());
  ForwardPass pass;
  pass.activations.emplace_back(as_vector(x));
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& layer = model.layers[k];
    Vector z = layer.weights * pass.activations.back() + layer.biases;
    if (k + 1 == model.layers.size()) {
      pass.logits = std::move(z);
    } else {
      pass.activations.push_back(z.cwiseMax(0.0));
    }
  }
  return pass;
}

LossAndGrads loss_and_grads(const MlpModel& model, const Matrix& batch, std::span<const int> labels,
                            double l2) {
  check_input(model, static_cast<std::size_t>(batch.cols()));
  const auto n = batch.rows();
  if (static_cast<std::size_t>(n) != labels.size())
    throw Error(ErrorCode::DimensionMismatch, "batch rows and labels differ in length");
  if (n == 0) throw Error(ErrorCode::EmptyTrainingSet, "empty batch");
  const auto classes = static_cast<int>(model.num_classes());
  for (int l : labels)
    if (l < 1 || l > classes) throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(l));

  BatchPass pass = batch_forward(model, batch);

  // Softmax cross-entropy; delta = (p - onehot) / n.
  Batch delta(n, classes);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto z = pass.logits.row(i);
    const double m = z.maxCoeff();
    const double log_sum = m + std::log((z.array() - m).exp().sum());
    const int y = labels[static_cast<std::size_t>(i)] - 1;
    loss += log_sum - z(y);
    delta.row(i) = (z.array() - log_sum).exp();
    delta(i, y) -= 1.0;
  }
  loss /= static_cast<double>(n);
  delta /= static_cast<double>(n);

  LossAndGrads out;
  out.grads.resize(model.layers.size());
  for (std::size_t k = model.layers.size(); k-- > 0;) {
    const auto& layer = model.layers[k];
    auto& g = out.grads[k];
    g.weights = delta.transpose() * pass.inputs[k];
    g.biases = delta.colwise().sum().transpose();
    if (l2 > 0.0) {
      g.weights += l2 * layer.weights;
      loss += 0.5 * l2 * layer.weights.squaredNorm();
    }
    if (k > 0) {
      Batch upstream = delta * layer.weights;
      // ReLU derivative: active units have positive output.
      delta = upstream.cwiseProduct((pass.inputs[k].array() > 0.0).cast<double>().matrix());
    }
  }
  out.loss = loss;
  return out;
}

MlpTrainResult train_mlp(MlpModel model, const Matrix& features, std::span<const int> labels,
                         const MlpTrainConfig& config) {
  validate(config);
  const auto n = static_cast<std::size_t>(features.rows());
  if (n == 0) throw Error(ErrorCode::EmptyTrainingSet, "no training samples");
  if (labels.size() != n) throw Error(ErrorCode::DimensionMismatch, "features and labels differ in length");
  check_input(model, static_cast<std::size_t>(features.cols()));

  // Shuffle stream kept apart from the init stream for the same seed.
  Rng rng(Rng::derive(config.seed, 1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  MlpTrainResult result;
  result.loss_history.reserve(config.epochs);
  std::vector<int> batch_labels;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      Matrix batch = select_rows(features, idx);
      batch_labels.clear();
      for (auto i : idx) batch_labels.push_back(labels[i]);

      auto lg = loss_and_grads(model, batch, batch_labels, config.l2);
      epoch_loss += lg.loss * static_cast<double>(idx.size());
      if (config.learning_rate > 0.0) {
        for (std::size_t k = 0; k < model.layers.size(); ++k) {
          model.layers[k].weights -= config.learning_rate * lg.grads[k].weights;
          model.layers[k].biases -= config.learning_rate * lg.grads[k].biases;
        }
      }
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(n));
  }
  result.model = std::move(model);
  return result;
}

Vector hidden_features(const MlpModel& model, std::span<const double> x) {
  check_input(model, x.size());
  Vector a = as_vector(x);
  for (std::size_t k = 0; k + 1 < model.layers.size(); ++k)
    a = (model.layers[k].weights * a + model.layers[k].biases).cwiseMax(0.0);
  return a;
}

// Row-by-row through the single-sample path so batch and per-sample results
// are bit-identical (a blocked GEMM would reorder the accumulation).
Matrix hidden_features(const MlpModel& model, const Matrix& rows) {
  check_input(model, static_cast<std::size_t>(rows.cols()));
  Matrix out(rows.rows(), static_cast<Eigen::Index>(model.hidden_width()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.row(i) = hidden_features(model, row_span(rows, i)).transpose();
  return out;
}

int argmax_class(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return static_cast<int>(best) + 1;
}

int mlp_predict(const MlpModel& model, std::span<const double> x) {
  const auto pass = forward(model, x);
  return argmax_class({pass.logits.data(), static_cast<std::size_t>(pass.logits.size())});
}

std::vector<int> mlp_predict(const MlpModel& model, const Matrix& rows) {
  check_input(model, static_cast<std::size_t>(rows.cols()));
  std::vector<int> out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out[static_cast<std::size_t>(i)] = mlp_predict(model, row_span(rows, i));
  return out;
}

std::vector<std::byte> save_mlp(const MlpModel& model) {
  detail::ByteWriter w;
  w.magic("MLP1");
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    w.u32(static_cast<std::uint32_t>(layer.in_dim()));
    w.u32(static_cast<std::uint32_t>(layer.out_dim()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.f64(layer.weights(r, c));
    for (Eigen::Index r = 0; r < layer.biases.size(); ++r) w.f64(layer.biases(r));
  }
  return w.take();
}

MlpModel load_mlp(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("MLP1");
  const auto count = r.u32();
  if (count < 2) throw Error(ErrorCode::CorruptModel, "MLP needs at least two layers");
  MlpModel model;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto in = r.u32();
    const auto out = r.u32();
    if (in == 0 || out == 0) throw Error(ErrorCode::CorruptModel, "zero-width layer");
    if (k > 0 && in != model.layers.back().out_dim())
      throw Error(ErrorCode::CorruptModel, "layer " + std::to_string(k) + " does not chain");
    LayerParams layer{Eigen::MatrixXd(out, in), Vector(out)};
    for (std::uint32_t i = 0; i < out; ++i)
      for (std::uint32_t j = 0; j < in; ++j) layer.weights(i, j) = r.f64();
    for (std::uint32_t i = 0; i < out; ++i) layer.biases(i) = r.f64();
    model.layers.push_back(std::move(layer));
  }
  r.expect_done();
  return model;
}

}  // namespace hsi
