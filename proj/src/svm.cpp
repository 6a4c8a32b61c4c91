#include "hsi/svm.hpp"

#include "byte_io.hpp"
#include "hsi/error.hpp"
#include "hsi/mlp.hpp"
#include "hsi/parallel.hpp"
#include "hsi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace hsi {

namespace {

void check_dims(std::size_t a, std::size_t b) {
  if (a != b)
    throw Error(ErrorCode::DimensionMismatch, "vector of length " + std::to_string(a) +
                                                  " where " + std::to_string(b) + " was expected");
}

void check_binary(const Matrix& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw Error(ErrorCode::DimensionMismatch, "features and labels differ in length");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == -1) neg = true;
    else throw Error(ErrorCode::BadLabel, "binary labels must be -1 or +1, got " + std::to_string(v));
  }
  if (!pos || !neg) throw Error(ErrorCode::SingleClassInput, "both +1 and -1 labels are required");
}

Kernel resolve(Kernel k, std::size_t dim) {
  if (k.kind == KernelKind::Rbf && !(k.gamma > 0.0)) k.gamma = 1.0 / static_cast<double>(dim);
  return k;
}

// Dense Gram matrix, filled symmetrically with the same kernel_eval used at
// prediction time so training and decision values agree exactly.
Eigen::MatrixXd gram_matrix(const Matrix& x, const Kernel& k) {
  const auto n = x.rows();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) g(i, j) = g(j, i) = kernel_eval(k, row_span(x, i), row_span(x, j));
  return g;
}

// Above this many points the Gram matrix is not materialized and kernel
// rows are recomputed on demand.
constexpr Eigen::Index kMaxGramRows = 8192;

class KernelRows {
 public:
  KernelRows(const Matrix& x, const Kernel& k, const Eigen::MatrixXd* gram)
      : x_(x), k_(k), gram_(gram), scratch_(2, std::vector<double>(static_cast<std::size_t>(x.rows()))) {}

  // Row i of the Gram matrix. `slot` picks one of two scratch buffers when
  // rows are computed on the fly, so two rows may be held at once.
  std::span<const double> row(Eigen::Index i, int slot) {
    const auto n = static_cast<std::size_t>(x_.rows());
    if (gram_) return {gram_->data() + i * gram_->rows(), n};  // symmetric: column i == row i
    auto& buf = scratch_[static_cast<std::size_t>(slot)];
    for (std::size_t j = 0; j < n; ++j) buf[j] = kernel_eval(k_, row_span(x_, i), row_span(x_, static_cast<Eigen::Index>(j)));
    return buf;
  }

  double at(Eigen::Index i, Eigen::Index j) const {
    if (gram_) return (*gram_)(i, j);
    return kernel_eval(k_, row_span(x_, i), row_span(x_, j));
  }

 private:
  const Matrix& x_;
  Kernel k_;
  const Eigen::MatrixXd* gram_;
  std::vector<std::vector<double>> scratch_;
};

class SmoSolver {
 public:
  SmoSolver(const Matrix& x, std::span<const int> y, const SvmTrainConfig& cfg, Kernel kernel,
            const Eigen::MatrixXd* gram)
      : x_(x), y_(y), c_(cfg.c), tol_(cfg.tol), kernel_(kernel), rows_(x, kernel, gram),
        rng_(cfg.seed), n_(static_cast<std::size_t>(x.rows())), alpha_(n_, 0.0), err_(n_) {}

  SmoResult run(std::size_t max_passes) {
    for (std::size_t i = 0; i < n_; ++i) err_[i] = -y_[i];
    std::size_t quiet_full_passes = 0;
    bool examine_all = true;
    SmoResult result;
    while (quiet_full_passes < max_passes && result.passes < kMaxPasses) {
      ++result.passes;
      if (examine_all) refresh_errors();
      std::size_t changed = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (!examine_all && (alpha_[i] <= 0.0 || alpha_[i] >= c_)) continue;
        if (examine(i)) ++changed;
      }
      if (examine_all) {
        quiet_full_passes = changed == 0 ? quiet_full_passes + 1 : 0;
        if (changed > 0) examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
    }
    refresh_errors();
    result.converged = !any_violation();
    result.alphas = alpha_;
    result.model = extract();
    result.dual_objective = objective();
    return result;
  }

 private:
  static constexpr std::size_t kMaxPasses = 100000;
  static constexpr double kStepEps = 1e-12;
  static constexpr double kBoundEps = 1e-12;

  bool violates(std::size_t i) const {
    const double r = y_[i] * err_[i];
    return (r < -tol_ && alpha_[i] < c_) || (r > tol_ && alpha_[i] > 0.0);
  }

  bool any_violation() const {
    for (std::size_t i = 0; i < n_; ++i)
      if (violates(i)) return true;
    return false;
  }

  bool examine(std::size_t i) {
    if (!violates(i)) return false;
    // Second point: largest |E_i - E_j|, ties to the smallest index.
    std::size_t best = i;
    double gap = -1.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (j == i) continue;
      const double g = std::abs(err_[i] - err_[j]);
      if (g > gap) {
        gap = g;
        best = j;
      }
    }
    if (best != i && take_step(i, best)) return true;
    const std::size_t start = static_cast<std::size_t>(rng_.below(n_));
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t j = (start + k) % n_;
      if (j == i || j == best) continue;
      if (take_step(i, j)) return true;
    }
    return false;
  }

  bool take_step(std::size_t i, std::size_t j) {
    const double a1 = alpha_[i], a2 = alpha_[j];
    const double y1 = y_[i], y2 = y_[j];
    const double e1 = err_[i], e2 = err_[j];
    const double s = y1 * y2;
    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c_, c_ + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - c_);
      hi = std::min(c_, a1 + a2);
    }
    if (hi - lo <= 0.0) return false;

    const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
    const double k11 = rows_.at(ii, ii), k22 = rows_.at(jj, jj), k12 = rows_.at(ii, jj);
    const double eta = k11 + k22 - 2.0 * k12;
    double a2_new;
    if (eta > 1e-12) {
      a2_new = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Flat or concave along the constraint line: take the better endpoint.
      const double b = b_;
      const double f1 = y1 * (e1 - b) - a1 * k11 - s * a2 * k12;
      const double f2 = y2 * (e2 - b) - s * a1 * k12 - a2 * k22;
      auto obj_at = [&](double a2x) {
        const double a1x = a1 + s * (a2 - a2x);
        return a1x * f1 + a2x * f2 + 0.5 * a1x * a1x * k11 + 0.5 * a2x * a2x * k22 + s * a2x * a1x * k12;
      };
      const double lo_obj = obj_at(lo), hi_obj = obj_at(hi);
      if (lo_obj < hi_obj - kStepEps) a2_new = lo;
      else if (lo_obj > hi_obj + kStepEps) a2_new = hi;
      else return false;
    }
    if (std::abs(a2_new - a2) < kStepEps * (a2_new + a2 + kStepEps)) return false;

    double a1_new = a1 + s * (a2 - a2_new);
    // Push rounding spill from a1's box back onto a2, keeping sum(alpha y) fixed.
    if (a1_new < 0.0) {
      a2_new += s * a1_new;
      a1_new = 0.0;
    } else if (a1_new > c_) {
      a2_new += s * (a1_new - c_);
      a1_new = c_;
    }
    // Snap to the box so bound multipliers are recognised exactly.
    auto snap = [&](double a) { return a < kBoundEps * c_ ? 0.0 : (a > c_ * (1.0 - kBoundEps) ? c_ : a); };
    a1_new = snap(a1_new);
    a2_new = snap(a2_new);

    const double d1 = y1 * (a1_new - a1), d2 = y2 * (a2_new - a2);
    const double b1 = b_ - e1 - d1 * k11 - d2 * k12;
    const double b2 = b_ - e2 - d1 * k12 - d2 * k22;
    double b_new;
    if (a1_new > 0.0 && a1_new < c_) b_new = b1;
    else if (a2_new > 0.0 && a2_new < c_) b_new = b2;
    else b_new = 0.5 * (b1 + b2);

    auto row1 = rows_.row(ii, 0);
    auto row2 = rows_.row(jj, 1);
    const double db = b_new - b_;
    for (std::size_t k = 0; k < n_; ++k) err_[k] += d1 * row1[k] + d2 * row2[k] + db;
    alpha_[i] = a1_new;
    alpha_[j] = a2_new;
    b_ = b_new;
    return true;
  }

  // Exact errors from the current alphas, discarding incremental drift. The
  // bias is refit to the middle of the interval the KKT conditions allow, so
  // a stale heuristic b cannot keep an optimal alpha looking infeasible.
  void refresh_errors() {
    std::vector<double> g(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] == 0.0) continue;
      auto row = rows_.row(static_cast<Eigen::Index>(i), 0);
      const double coef = alpha_[i] * y_[i];
      for (std::size_t k = 0; k < n_; ++k) g[k] += coef * row[k];
    }
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t k = 0; k < n_; ++k) {
      const double target = y_[k] - g[k];  // b making y f = 1
      if (alpha_[k] > 0.0 && alpha_[k] < c_) {
        free_sum += target;
        ++free_count;
      } else if ((alpha_[k] == 0.0) == (y_[k] > 0)) {
        lo = std::max(lo, target);
      } else {
        hi = std::min(hi, target);
      }
    }
    if (free_count > 0) b_ = free_sum / static_cast<double>(free_count);
    else if (std::isfinite(lo) && std::isfinite(hi)) b_ = 0.5 * (lo + hi);
    else if (std::isfinite(lo)) b_ = lo;
    else if (std::isfinite(hi)) b_ = hi;
    for (std::size_t k = 0; k < n_; ++k) err_[k] = g[k] + b_ - y_[k];
  }

  double objective() {
    double sum = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
    double quad = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] == 0.0) continue;
      auto row = rows_.row(static_cast<Eigen::Index>(i), 0);
      for (std::size_t j = 0; j < n_; ++j)
        if (alpha_[j] != 0.0) quad += alpha_[i] * alpha_[j] * y_[i] * y_[j] * row[j];
    }
    return sum - 0.5 * quad;
  }

  DualSvm extract() const {
    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < n_; ++i)
      if (alpha_[i] > 0.0) sv.push_back(i);
    DualSvm m;
    m.kernel = kernel_;
    m.b = b_;
    m.support_vectors = select_rows(x_, sv);
    m.coeffs.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t k = 0; k < sv.size(); ++k) m.coeffs(static_cast<Eigen::Index>(k)) = alpha_[sv[k]] * y_[sv[k]];
    return m;
  }

  const Matrix& x_;
  std::span<const int> y_;
  double c_, tol_;
  Kernel kernel_;
  KernelRows rows_;
  Rng rng_;
  std::size_t n_;
  std::vector<double> alpha_;
  std::vector<double> err_;
  double b_ = 0.0;
};

SmoResult run_smo(const Matrix& x, std::span<const int> y, const SvmTrainConfig& config,
                  const Eigen::MatrixXd* shared_gram) {
  validate(config);
  check_binary(x, y);
  const Kernel kernel = resolve(config.kernel, static_cast<std::size_t>(x.cols()));
  std::optional<Eigen::MatrixXd> own;
  const Eigen::MatrixXd* gram = shared_gram;
  if (!gram && x.rows() <= kMaxGramRows) {
    own = gram_matrix(x, kernel);
    gram = &*own;
  }
  SmoSolver solver(x, y, config, kernel, gram);
  return solver.run(config.max_passes);
}

}  // namespace

double hinge_loss(int label, double score) {
  if (label != 1 && label != -1) throw Error(ErrorCode::BadLabel, "label must be -1 or +1");
  return std::max(0.0, 1.0 - label * score);
}

double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> z) {
  check_dims(z.size(), x.size());
  if (k.kind == KernelKind::Linear) {
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * z[i];
    return dot;
  }
  double dist = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - z[i];
    dist += d * d;
  }
  return std::exp(-k.gamma * dist);
}

void validate(const SvmTrainConfig& c) {
  if (!(c.c > 0.0)) throw Error(ErrorCode::BadConfig, "SVM C must be positive");
  if (c.kernel.kind == KernelKind::Rbf && c.kernel.gamma < 0.0)
    throw Error(ErrorCode::BadConfig, "RBF gamma must be positive");
  if (c.epochs == 0) throw Error(ErrorCode::BadConfig, "SVM epochs must be positive");
  if (!(c.tol > 0.0)) throw Error(ErrorCode::BadConfig, "SMO tolerance must be positive");
  if (c.max_passes == 0) throw Error(ErrorCode::BadConfig, "SMO max_passes must be positive");
}

std::size_t input_dim(const BinarySvm& svm) {
  if (auto* p = std::get_if<PrimalSvm>(&svm)) return static_cast<std::size_t>(p->w.size());
  return static_cast<std::size_t>(std::get<DualSvm>(svm).support_vectors.cols());
}

double decision(const BinarySvm& svm, std::span<const double> x) {
  if (auto* p = std::get_if<PrimalSvm>(&svm)) {
    check_dims(x.size(), static_cast<std::size_t>(p->w.size()));
    return p->w.dot(as_vector(x)) + p->b;
  }
  const auto& d = std::get<DualSvm>(svm);
  if (d.support_vectors.rows() > 0) check_dims(x.size(), static_cast<std::size_t>(d.support_vectors.cols()));
  double f = d.b;
  for (Eigen::Index i = 0; i < d.support_vectors.rows(); ++i)
    f += d.coeffs(i) * kernel_eval(d.kernel, row_span(d.support_vectors, i), x);
  return f;
}

double primal_objective(const PrimalSvm& svm, const Matrix& x, std::span<const int> y, double c) {
  const double n = static_cast<double>(x.rows());
  const double lambda = 1.0 / (c * n);
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    hinge += hinge_loss(y[static_cast<std::size_t>(i)], svm.w.dot(x.row(i).transpose()) + svm.b);
  return 0.5 * lambda * (svm.w.squaredNorm() + svm.b * svm.b) + hinge / n;
}

PrimalTrace train_primal_traced(const Matrix& x, std::span<const int> y, const SvmTrainConfig& config) {
  validate(config);
  if (config.kernel.kind != KernelKind::Linear)
    throw Error(ErrorCode::NonLinearKernel, "the primal solver handles the linear kernel only");
  check_binary(x, y);

  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = x.cols();
  const double lambda = 1.0 / (config.c * static_cast<double>(n));
  const double radius = 1.0 / std::sqrt(lambda);

  Vector w = Vector::Zero(d);
  double b = 0.0;
  Vector w_sum = Vector::Zero(d);
  double b_sum = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  std::uint64_t t = 0;

  PrimalTrace trace;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const auto xi = x.row(static_cast<Eigen::Index>(i)).transpose();
      const double yi = y[i];
      const double margin = yi * (w.dot(xi) + b);
      w *= 1.0 - eta * lambda;
      b *= 1.0 - eta * lambda;
      if (margin < 1.0) {
        w += eta * yi * xi;
        b += eta * yi;
      }
      const double norm = std::sqrt(w.squaredNorm() + b * b);
      if (norm > radius) {
        w *= radius / norm;
        b *= radius / norm;
      }
      w_sum += w;
      b_sum += b;
    }
    trace.model.w = w_sum / static_cast<double>(t);
    trace.model.b = b_sum / static_cast<double>(t);
    trace.epoch_objective.push_back(primal_objective(trace.model, x, y, config.c));
  }
  return trace;
}

PrimalSvm train_primal(const Matrix& x, std::span<const int> y, const SvmTrainConfig& config) {
  return train_primal_traced(x, y, config).model;
}

SmoResult train_smo_full(const Matrix& x, std::span<const int> y, const SvmTrainConfig& config) {
  if (x.rows() < 2) throw Error(ErrorCode::SingleClassInput, "SMO needs at least two points");
  return run_smo(x, y, config, nullptr);
}

DualSvm train_smo(const Matrix& x, std::span<const int> y, const SvmTrainConfig& config) {
  return train_smo_full(x, y, config).model;
}

double dual_objective(const Matrix& x, std::span<const int> y, std::span<const double> alphas,
                      const Kernel& kernel) {
  const Kernel k = resolve(kernel, static_cast<std::size_t>(x.cols()));
  double sum = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    sum += alphas[i];
    for (std::size_t j = 0; j < alphas.size(); ++j)
      quad += alphas[i] * alphas[j] * y[i] * y[j] *
              kernel_eval(k, row_span(x, static_cast<Eigen::Index>(i)), row_span(x, static_cast<Eigen::Index>(j)));
  }
  return sum - 0.5 * quad;
}

MulticlassSvm train_one_vs_rest(const Matrix& x, std::span<const int> labels, int num_classes,
                                const SvmTrainConfig& config, unsigned threads) {
  validate(config);
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw Error(ErrorCode::DimensionMismatch, "features and labels differ in length");
  if (num_classes < 2) throw Error(ErrorCode::SingleClassInput, "one-vs-rest needs at least two classes");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes) + 1, 0);
  for (int l : labels) {
    if (l < 1 || l > num_classes) throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(l));
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int c = 1; c <= num_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw Error(ErrorCode::SingleClassInput, "class " + std::to_string(c) + " has no training samples");
    if (counts[static_cast<std::size_t>(c)] == labels.size())
      throw Error(ErrorCode::SingleClassInput, "machine " + std::to_string(c) + " sees a single class");
  }

  const Kernel kernel = resolve(config.kernel, static_cast<std::size_t>(x.cols()));
  std::optional<Eigen::MatrixXd> gram;
  if (kernel.kind == KernelKind::Rbf && x.rows() <= kMaxGramRows) gram = gram_matrix(x, kernel);

  MulticlassSvm out;
  out.classes.resize(static_cast<std::size_t>(num_classes));
  std::iota(out.classes.begin(), out.classes.end(), 1);
  out.machines.resize(out.classes.size());
  parallel_for(out.classes.size(), [&](std::size_t m) {
    const int cls = out.classes[m];
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == cls ? 1 : -1;
    SvmTrainConfig cfg = config;
    cfg.kernel = kernel;
    cfg.seed = config.seed + static_cast<std::uint64_t>(cls);
    if (kernel.kind == KernelKind::Linear) out.machines[m] = train_primal(x, y, cfg);
    else out.machines[m] = run_smo(x, y, cfg, gram ? &*gram : nullptr).model;
  }, threads);
  return out;
}

std::vector<double> decision_values(const MulticlassSvm& svm, std::span<const double> x) {
  std::vector<double> out;
  out.reserve(svm.machines.size());
  for (const auto& m : svm.machines) out.push_back(decision(m, x));
  return out;
}

int predict_from_decisions(const MulticlassSvm& svm, std::span<const double> decisions) {
  return svm.classes[static_cast<std::size_t>(argmax_class(decisions) - 1)];
}

int predict_multiclass(const MulticlassSvm& svm, std::span<const double> x) {
  return predict_from_decisions(svm, decision_values(svm, x));
}

std::vector<std::byte> save_svm(const MulticlassSvm& svm) {
  detail::ByteWriter w;
  w.magic("SVM1");
  w.u32(static_cast<std::uint32_t>(svm.classes.size()));
  for (int c : svm.classes) w.u32(static_cast<std::uint32_t>(c));
  for (const auto& m : svm.machines) {
    if (auto* p = std::get_if<PrimalSvm>(&m)) {
      w.u32(0);
      w.u32(static_cast<std::uint32_t>(p->w.size()));
      for (Eigen::Index i = 0; i < p->w.size(); ++i) w.f64(p->w(i));
      w.f64(p->b);
    } else {
      const auto& d = std::get<DualSvm>(m);
      w.u32(1);
      w.u32(d.kernel.kind == KernelKind::Linear ? 0 : 1);
      w.f64(d.kernel.gamma);
      w.u32(static_cast<std::uint32_t>(d.support_vectors.rows()));
      w.u32(static_cast<std::uint32_t>(d.support_vectors.cols()));
      for (Eigen::Index i = 0; i < d.support_vectors.size(); ++i) w.f64(d.support_vectors.data()[i]);
      for (Eigen::Index i = 0; i < d.coeffs.size(); ++i) w.f64(d.coeffs(i));
      w.f64(d.b);
    }
  }
  return w.take();
}

MulticlassSvm load_svm(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("SVM1");
  MulticlassSvm svm;
  const auto count = r.u32();
  if (count < 2) throw Error(ErrorCode::CorruptModel, "multiclass SVM needs at least two machines");
  for (std::uint32_t i = 0; i < count; ++i) svm.classes.push_back(static_cast<int>(r.u32()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto tag = r.u32();
    if (tag == 0) {
      PrimalSvm p;
      p.w.resize(r.u32());
      for (Eigen::Index k = 0; k < p.w.size(); ++k) p.w(k) = r.f64();
      p.b = r.f64();
      svm.machines.emplace_back(std::move(p));
    } else if (tag == 1) {
      DualSvm d;
      const auto kind = r.u32();
      if (kind > 1) throw Error(ErrorCode::CorruptModel, "unknown kernel tag");
      d.kernel.kind = kind == 0 ? KernelKind::Linear : KernelKind::Rbf;
      d.kernel.gamma = r.f64();
      const auto m = r.u32();
      const auto dim = r.u32();
      d.support_vectors.resize(m, dim);
      for (Eigen::Index k = 0; k < d.support_vectors.size(); ++k) d.support_vectors.data()[k] = r.f64();
      d.coeffs.resize(m);
      for (Eigen::Index k = 0; k < d.coeffs.size(); ++k) d.coeffs(k) = r.f64();
      d.b = r.f64();
      svm.machines.emplace_back(std::move(d));
    } else {
      throw Error(ErrorCode::CorruptModel, "unknown machine form tag " + std::to_string(tag));
    }
  }
  r.expect_done();
  return svm;
}

}  // namespace hsi
