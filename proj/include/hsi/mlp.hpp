#pragma once

#include "hsi/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hsi {

// One dense layer mapping in_dim -> out_dim: z = weights * a + biases.
struct LayerParams {
  Eigen::MatrixXd weights;  // out_dim x in_dim
  Vector biases;            // out_dim

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

// ReLU hidden layers followed by a linear output layer producing logits.
struct MlpModel {
  std::vector<LayerParams> layers;

  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t num_classes() const { return layers.back().out_dim(); }
  std::size_t hidden_width() const { return layers[layers.size() - 2].out_dim(); }
};

struct MlpTrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double l2 = 0.0;
  std::uint64_t seed = 42;
};

void validate(const MlpTrainConfig& config);

// Input width F, hidden layers 500/350/250, output C.
std::vector<std::size_t> default_layer_sizes(std::size_t input_dim, std::size_t num_classes);

// He-normal weights (std sqrt(2 / in_dim)), zero biases.
MlpModel init_mlp(std::span<const std::size_t> layer_sizes, std::uint64_t seed);

struct ForwardPass {
  std::vector<Vector> activations;  // a_0 = x, then each hidden layer post-ReLU
  Vector logits;
};

ForwardPass forward(const MlpModel& model, std::span<const double> x);

struct LossAndGrads {
  double loss = 0.0;
  std::vector<LayerParams> grads;  // same shapes as model.layers
};

// Mean softmax cross-entropy over the batch (labels are 1-based), plus
// l2 / 2 * sum of squared weights when l2 > 0. Biases are not penalized.
LossAndGrads loss_and_grads(const MlpModel& model, const Matrix& batch, std::span<const int> labels,
                            double l2 = 0.0);

struct MlpTrainResult {
  MlpModel model;
  std::vector<double> loss_history;  // mean training loss per epoch
};

// Mini-batch SGD with a seeded per-epoch shuffle.
MlpTrainResult train_mlp(MlpModel model, const Matrix& features, std::span<const int> labels,
                         const MlpTrainConfig& config);

// Post-ReLU activation of the last hidden layer.
Vector hidden_features(const MlpModel& model, std::span<const double> x);
Matrix hidden_features(const MlpModel& model, const Matrix& rows);

int mlp_predict(const MlpModel& model, std::span<const double> x);
std::vector<int> mlp_predict(const MlpModel& model, const Matrix& rows);

// 1-based argmax, ties to the smallest class id.
int argmax_class(std::span<const double> scores);

std::vector<std::byte> save_mlp(const MlpModel& model);
MlpModel load_mlp(std::span<const std::byte> bytes);

}  // namespace hsi
