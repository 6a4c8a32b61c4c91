#pragma once

#include "hsi/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace hsi {

enum class KernelKind { Linear, Rbf };

struct Kernel {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 0.0;  // Rbf only; 0 means 1/d, resolved at training time
};

double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> z);

// max(0, 1 - label * score) for label in {-1, +1}.
double hinge_loss(int label, double score);

struct PrimalSvm {
  Vector w;
  double b = 0.0;
};

struct DualSvm {
  Matrix support_vectors;  // m x d
  Vector coeffs;           // alpha_i * y_i, nonzero
  double b = 0.0;
  Kernel kernel;
};

using BinarySvm = std::variant<PrimalSvm, DualSvm>;

std::size_t input_dim(const BinarySvm& svm);
double decision(const BinarySvm& svm, std::span<const double> x);

struct SvmTrainConfig {
  double c = 1.0;
  Kernel kernel{};
  std::size_t epochs = 50;       // primal
  double tol = 1e-3;             // SMO
  std::size_t max_passes = 10;   // SMO
  std::uint64_t seed = 42;
};

void validate(const SvmTrainConfig& config);

// Regularized objective used by the primal solver, lambda = 1 / (C n):
//   lambda / 2 * (|w|^2 + b^2) + mean hinge.
// The bias rides along as a constant-1 feature and is regularized with w.
double primal_objective(const PrimalSvm& svm, const Matrix& x, std::span<const int> y, double c);

struct PrimalTrace {
  PrimalSvm model;
  std::vector<double> epoch_objective;  // objective of the running average after each epoch
};

// Stochastic subgradient descent with step 1 / (lambda t), returning the
// running average of every iterate since the first step.
PrimalSvm train_primal(const Matrix& x, std::span<const int> y, const SvmTrainConfig& config);
PrimalTrace train_primal_traced(const Matrix& x, std::span<const int> y, const SvmTrainConfig& config);

struct SmoResult {
  DualSvm model;
  std::vector<double> alphas;  // one per training point
  double dual_objective = 0.0;
  std::size_t passes = 0;
  bool converged = false;
};

// Sequential minimal optimization of the soft-margin dual.
SmoResult train_smo_full(const Matrix& x, std::span<const int> y, const SvmTrainConfig& config);
DualSvm train_smo(const Matrix& x, std::span<const int> y, const SvmTrainConfig& config);

// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j k(x_i, x_j)
double dual_objective(const Matrix& x, std::span<const int> y, std::span<const double> alphas,
                      const Kernel& kernel);

struct MulticlassSvm {
  std::vector<int> classes;
  std::vector<BinarySvm> machines;
};

// One machine per class id in 1..num_classes (+1 for that class, -1 for the
// rest). Linear kernels use the primal solver, Rbf uses SMO. Machines train
// on up to `threads` workers with seed + class_id each.
MulticlassSvm train_one_vs_rest(const Matrix& x, std::span<const int> labels, int num_classes,
                                const SvmTrainConfig& config, unsigned threads = 1);

std::vector<double> decision_values(const MulticlassSvm& svm, std::span<const double> x);
int predict_multiclass(const MulticlassSvm& svm, std::span<const double> x);
// Argmax of a decision-value vector, mapped through svm.classes.
int predict_from_decisions(const MulticlassSvm& svm, std::span<const double> decisions);

std::vector<std::byte> save_svm(const MulticlassSvm& svm);
MulticlassSvm load_svm(std::span<const std::byte> bytes);

}  // namespace hsi
