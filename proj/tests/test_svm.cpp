#include "hsi/error.hpp"
#include "hsi/svm.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace hsi;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Blobs centred on the given points, sigma 0.5.
std::pair<Matrix, std::vector<int>> blobs(const std::vector<std::array<double, 2>>& centres, std::size_t per_class,
                                          std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(centres.size() * per_class), 2);
  std::vector<int> y;
  Eigen::Index r = 0;
  for (std::size_t c = 0; c < centres.size(); ++c)
    for (std::size_t i = 0; i < per_class; ++i, ++r) {
      x(r, 0) = centres[c][0] + 0.5 * rng.normal();
      x(r, 1) = centres[c][1] + 0.5 * rng.normal();
      y.push_back(static_cast<int>(c) + 1);
    }
  return {x, y};
}

std::vector<int> to_pm(const std::vector<int>& y) {
  std::vector<int> out;
  for (int v : y) out.push_back(v == 1 ? -1 : 1);
  return out;
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("hinge loss") {
  CHECK(hinge_loss(1, 2.0) == 0.0);
  CHECK(hinge_loss(1, 0.5) == 0.5);
  CHECK(hinge_loss(-1, 1.0) == 2.0);
  CHECK_THROWS_AS(hinge_loss(0, 1.0), Error);
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const int y = rng.below(2) ? 1 : -1;
    const double s = 3.0 * rng.normal();
    const double h = hinge_loss(y, s);
    CHECK(h >= 0.0);
    CHECK((h == 0.0) == (y * s >= 1.0));
  }
}

TEST_CASE("kernels") {
  const std::vector<double> a{1, 2}, b{3, 4}, zero{0}, two{2};
  CHECK(kernel_eval({KernelKind::Linear, 0}, a, b) == 11.0);
  CHECK(kernel_eval({KernelKind::Rbf, 0.7}, a, a) == 1.0);
  CHECK(kernel_eval({KernelKind::Rbf, 0.5}, zero, two) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(kernel_eval({KernelKind::Linear, 0}, a, zero), Error);
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(3), z(3);
    for (auto& v : x) v = rng.normal();
    for (auto& v : z) v = rng.normal();
    const Kernel k{KernelKind::Rbf, 0.1 + rng.uniform()};
    const double kv = kernel_eval(k, x, z);
    CHECK(kv > 0.0);
    CHECK(kv <= 1.0);
    CHECK(kv == kernel_eval(k, z, x));
  }
}

TEST_CASE("decision values") {
  PrimalSvm p{Vector(2), 0.5};
  p.w << 1, -1;
  const std::vector<double> x{2, 1};
  CHECK(decision(BinarySvm{p}, x) == 1.5);

  DualSvm d;
  d.support_vectors = Matrix::Zero(2, 2);
  d.coeffs = Vector::Zero(2);
  d.b = -0.25;
  d.kernel = {KernelKind::Rbf, 1.0};
  CHECK(decision(BinarySvm{d}, x) == -0.25);

  // Affine in x under the linear kernel.
  d.support_vectors = rows({{1, 2}, {-1, 0.5}});
  d.coeffs << 0.3, -0.7;
  d.kernel = {KernelKind::Linear, 0};
  const std::vector<double> u{0.5, -2}, v{1.5, 3}, uv{2, 1}, o{0, 0};
  CHECK(decision(BinarySvm{d}, uv) + decision(BinarySvm{d}, o) ==
        doctest::Approx(decision(BinarySvm{d}, u) + decision(BinarySvm{d}, v)).epsilon(1e-14));
}

TEST_CASE("primal: separable pair and determinism") {
  const auto x = rows({{-1}, {1}});
  const std::vector<int> y{-1, 1};
  SvmTrainConfig cfg;
  cfg.kernel.kind = KernelKind::Linear;
  const auto m = train_primal(x, y, cfg);
  CHECK(decision(BinarySvm{m}, row_span(x, 0)) < 0);
  CHECK(decision(BinarySvm{m}, row_span(x, 1)) > 0);
  const auto again = train_primal(x, y, cfg);
  CHECK(again.w == m.w);
  CHECK(again.b == m.b);
}

TEST_CASE("primal: blobs are separated and the averaged objective does not climb") {
  const auto [x, labels] = blobs({{{-2, -2}}, {{2, 2}}}, 100, 17);
  const auto y = to_pm(labels);
  SvmTrainConfig cfg;
  cfg.kernel.kind = KernelKind::Linear;
  cfg.epochs = 40;
  const auto trace = train_primal_traced(x, y, cfg);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    CHECK(y[static_cast<std::size_t>(i)] * decision(BinarySvm{trace.model}, row_span(x, i)) > 0);
  for (std::size_t e = 1; e < trace.epoch_objective.size(); ++e)
    CHECK(trace.epoch_objective[e] <= trace.epoch_objective[e - 1] + 1e-6);
}

TEST_CASE("primal rejects kernels and one-class input") {
  const auto x = rows({{0}, {1}});
  SvmTrainConfig cfg;
  cfg.kernel.kind = KernelKind::Rbf;
  CHECK_THROWS_AS(train_primal(x, std::vector<int>{-1, 1}, cfg), Error);
  cfg.kernel.kind = KernelKind::Linear;
  CHECK_THROWS_AS(train_primal(x, std::vector<int>{1, 1}, cfg), Error);
  CHECK_THROWS_AS(train_primal(x, std::vector<int>{2, 1}, cfg), Error);
}

TEST_CASE("SMO: two points solved by hand") {
  // alpha_1 = alpha_2 = 1/2, w = 1, b = -1.
  const auto x = rows({{0}, {2}});
  const std::vector<int> y{-1, 1};
  SvmTrainConfig cfg;
  cfg.kernel = {KernelKind::Linear, 0};
  cfg.c = 10;
  const auto r = train_smo_full(x, y, cfg);
  const std::vector<double> mid{1.0};
  CHECK(std::abs(decision(BinarySvm{r.model}, mid)) < 1e-6);
  CHECK(r.alphas[0] == doctest::Approx(0.5));
  CHECK(r.alphas[1] == doctest::Approx(0.5));
}

TEST_CASE("SMO: XOR under an RBF kernel") {
  const auto x = rows({{0, 0}, {1, 1}, {1, 0}, {0, 1}});
  const std::vector<int> y{-1, -1, 1, 1};
  SvmTrainConfig cfg;
  cfg.kernel = {KernelKind::Rbf, 1.0};
  cfg.c = 10;
  const auto m = train_smo(x, y, cfg);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(y[static_cast<std::size_t>(i)] * decision(BinarySvm{m}, row_span(x, i)) > 0);
}

TEST_CASE("SMO post-conditions on random sets") {
  Rng rng(1234);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<Eigen::Index>(4 + rng.below(37));
    const auto d = static_cast<Eigen::Index>(1 + rng.below(5));
    Matrix x(n, d);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = i % 2 == 0 ? 1 : -1;
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal() + 0.7 * y[static_cast<std::size_t>(i)];
    }
    SvmTrainConfig cfg;
    cfg.kernel = {trial % 2 ? KernelKind::Linear : KernelKind::Rbf, 0.5};
    cfg.c = 0.5 + 2.0 * rng.uniform();
    cfg.seed = rng.next();
    const auto r = train_smo_full(x, y, cfg);
    CHECK(r.converged);
    CHECK(std::abs(r.model.coeffs.sum()) < 1e-9);
    CHECK(oracle::kkt_violation(x, y, r.model, r.alphas, cfg.c) <= cfg.tol + 1e-9);
    for (double a : r.alphas) {
      CHECK(a >= 0.0);
      CHECK(a <= cfg.c);
    }
  }
}

TEST_CASE("SMO dual objective agrees with its own evaluator") {
  const auto x = rows({{0, 1}, {1, 2}, {2, 0}, {3, 3}, {-1, 0}});
  const std::vector<int> y{-1, -1, 1, 1, -1};
  SvmTrainConfig cfg;
  cfg.kernel = {KernelKind::Rbf, 0.3};
  const auto r = train_smo_full(x, y, cfg);
  CHECK(r.dual_objective == doctest::Approx(dual_objective(x, y, r.alphas, cfg.kernel)).epsilon(1e-12));
  CHECK(r.dual_objective == doctest::Approx(oracle::dual_value(x, y, r.alphas, cfg.kernel)).epsilon(1e-12));
}

TEST_CASE("one-vs-rest structure, accuracy and errors") {
  const auto [x, y] = blobs({{{0, 0}}, {{4, 0}}, {{0, 4}}}, 40, 5);
  const auto [xt, yt] = blobs({{{0, 0}}, {{4, 0}}, {{0, 4}}}, 20, 6);
  SvmTrainConfig cfg;
  const auto m = train_one_vs_rest(x, y, 3, cfg);
  CHECK(m.machines.size() == 3);
  for (Eigen::Index i = 0; i < xt.rows(); ++i) CHECK(predict_multiclass(m, row_span(xt, i)) == yt[static_cast<std::size_t>(i)]);

  CHECK_THROWS_AS(train_one_vs_rest(x, y, 4, cfg), Error);

  // Threads do not change the machines.
  const auto threaded = train_one_vs_rest(x, y, 3, cfg, 3);
  CHECK(save_svm(threaded) == save_svm(m));
  CHECK(save_svm(load_svm(save_svm(m))) == save_svm(m));

  cfg.kernel.kind = KernelKind::Linear;
  const auto lin = train_one_vs_rest(x, y, 3, cfg);
  CHECK(std::holds_alternative<PrimalSvm>(lin.machines[0]));
  CHECK(save_svm(load_svm(save_svm(lin))) == save_svm(lin));
}

TEST_CASE("multiclass argmax and ties") {
  MulticlassSvm m;
  m.classes = {1, 2, 3};
  const std::vector<double> d{-0.2, 0.9, 0.1}, tie{0.5, 0.5, 0.1};
  CHECK(predict_from_decisions(m, d) == 2);
  CHECK(predict_from_decisions(m, tie) == 1);

  // Prediction is a function of the decision vector alone.
  const auto [x, y] = blobs({{{0, 0}}, {{3, 0}}, {{0, 3}}}, 15, 9);
  const auto trained = train_one_vs_rest(x, y, 3, SvmTrainConfig{});
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto dv = decision_values(trained, row_span(x, i));
    CHECK(predict_multiclass(trained, row_span(x, i)) == predict_from_decisions(trained, dv));
  }
}

}  // TEST_SUITE
