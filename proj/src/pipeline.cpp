#include "hsi/pipeline.hpp"

#include "hsi/error.hpp"
#include "hsi/render.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <set>

namespace hsi {

using nlohmann::json;

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw Error(ErrorCode::BadConfig, "unknown key '" + key + "' in " + where);
}

std::string kernel_name(KernelKind k) { return k == KernelKind::Linear ? "linear" : "rbf"; }

KernelKind parse_kernel(const std::string& s) {
  if (s == "linear") return KernelKind::Linear;
  if (s == "rbf") return KernelKind::Rbf;
  throw Error(ErrorCode::BadConfig, "kernel must be 'linear' or 'rbf', got '" + s + "'");
}

std::vector<int> predict_rows(const Matrix& x, const std::function<int(std::span<const double>)>& f) {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = f(row_span(x, i));
  return out;
}

MetricsReport evaluate(const std::vector<int>& truth, const std::vector<int>& preds, int num_classes, bool weighted) {
  return make_report(build_confusion(truth, preds, num_classes), weighted);
}

std::string method_name(const std::string& head_kind, bool hybrid) {
  std::string base = head_kind == "svm"      ? "SVM"
                     : head_kind == "knn"    ? "KNN"
                     : head_kind == "forest" ? "RF"
                                             : "DT";
  return hybrid ? "MLP-" + base : base;
}

// Runs `body`, mapping library errors onto exit codes with a message on stderr.
template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
}

std::vector<std::size_t> layer_sizes(const RunConfig& config, std::size_t input_dim, int num_classes) {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), config.hidden_layers.begin(), config.hidden_layers.end());
  sizes.push_back(static_cast<std::size_t>(num_classes));
  return sizes;
}

}  // namespace

MlpTrainConfig RunConfig::mlp_config() const {
  MlpTrainConfig c = mlp;
  c.seed = seed;
  return c;
}

SvmTrainConfig RunConfig::svm_config() const {
  SvmTrainConfig c = svm;
  c.seed = seed;
  return c;
}

HeadKind RunConfig::head_kind(const std::string& kind) const {
  if (kind == "svm") return SvmHead{svm_config()};
  if (kind == "knn") return KnnHead{head.knn_k};
  if (kind == "tree") return TreeHead{TreeConfig{head.tree_max_depth, head.tree_min_samples_split, 0, seed}};
  if (kind == "forest") {
    ForestConfig fc;
    fc.n_trees = head.forest_trees;
    fc.max_depth = head.tree_max_depth;
    fc.min_samples_split = head.tree_min_samples_split;
    fc.m_try = head.forest_m_try;
    fc.seed = seed;
    return ForestHead{fc};
  }
  throw Error(ErrorCode::BadConfig, "head must be svm, knn, tree or forest; got '" + kind + "'");
}

HybridOptions RunConfig::hybrid_options() const {
  HybridOptions o;
  o.paper_literal_resplit = paper_literal_resplit;
  o.split_fraction = split_fraction;
  o.threads = threads;
  return o;
}

RunConfig parse_run_config(const std::string& json_text, RunConfig c) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"cube_path", "labels_path", "patch_size", "seed", "mlp", "svm", "head", "split_fraction",
                  "paper_literal_resplit", "per_band_normalize", "weighted_macro", "mask_background"},
                 "config");
  read_key(j, "cube_path", c.cube_path);
  read_key(j, "labels_path", c.labels_path);
  read_key(j, "patch_size", c.patch_size);
  read_key(j, "seed", c.seed);
  read_key(j, "split_fraction", c.split_fraction);
  read_key(j, "paper_literal_resplit", c.paper_literal_resplit);
  read_key(j, "per_band_normalize", c.per_band_normalize);
  read_key(j, "weighted_macro", c.weighted_macro);
  read_key(j, "mask_background", c.mask_background);
  if (j.contains("mlp")) {
    const auto& m = j["mlp"];
    reject_unknown(m, {"hidden_layers", "learning_rate", "epochs", "batch_size", "l2"}, "mlp");
    read_key(m, "hidden_layers", c.hidden_layers);
    read_key(m, "learning_rate", c.mlp.learning_rate);
    read_key(m, "epochs", c.mlp.epochs);
    read_key(m, "batch_size", c.mlp.batch_size);
    read_key(m, "l2", c.mlp.l2);
  }
  if (j.contains("svm")) {
    const auto& s = j["svm"];
    reject_unknown(s, {"c", "kernel", "gamma", "epochs", "tol", "max_passes"}, "svm");
    read_key(s, "c", c.svm.c);
    std::string kernel = kernel_name(c.svm.kernel.kind);
    read_key(s, "kernel", kernel);
    c.svm.kernel.kind = parse_kernel(kernel);
    read_key(s, "gamma", c.svm.kernel.gamma);
    read_key(s, "epochs", c.svm.epochs);
    read_key(s, "tol", c.svm.tol);
    read_key(s, "max_passes", c.svm.max_passes);
  }
  if (j.contains("head")) {
    const auto& h = j["head"];
    if (h.is_string()) {
      c.head.kind = h.get<std::string>();
    } else {
      reject_unknown(h, {"kind", "knn_k", "tree_max_depth", "tree_min_samples_split", "forest_trees", "forest_m_try"},
                     "head");
      read_key(h, "kind", c.head.kind);
      read_key(h, "knn_k", c.head.knn_k);
      read_key(h, "tree_max_depth", c.head.tree_max_depth);
      read_key(h, "tree_min_samples_split", c.head.tree_min_samples_split);
      read_key(h, "forest_trees", c.head.forest_trees);
      read_key(h, "forest_m_try", c.head.forest_m_try);
    }
  }
  return c;
}

std::string run_config_json(const RunConfig& c) {
  json j;
  j["cube_path"] = c.cube_path;
  j["labels_path"] = c.labels_path;
  j["patch_size"] = c.patch_size;
  j["seed"] = c.seed;
  j["mlp"] = {{"hidden_layers", c.hidden_layers},
              {"learning_rate", c.mlp.learning_rate},
              {"epochs", c.mlp.epochs},
              {"batch_size", c.mlp.batch_size},
              {"l2", c.mlp.l2}};
  j["svm"] = {{"c", c.svm.c},
              {"kernel", kernel_name(c.svm.kernel.kind)},
              {"gamma", c.svm.kernel.gamma},
              {"epochs", c.svm.epochs},
              {"tol", c.svm.tol},
              {"max_passes", c.svm.max_passes}};
  j["head"] = {{"kind", c.head.kind},
               {"knn_k", c.head.knn_k},
               {"tree_max_depth", c.head.tree_max_depth},
               {"tree_min_samples_split", c.head.tree_min_samples_split},
               {"forest_trees", c.head.forest_trees},
               {"forest_m_try", c.head.forest_m_try}};
  j["split_fraction"] = c.split_fraction;
  j["paper_literal_resplit"] = c.paper_literal_resplit;
  j["per_band_normalize"] = c.per_band_normalize;
  j["weighted_macro"] = c.weighted_macro;
  j["mask_background"] = c.mask_background;
  return j.dump(2);
}

void validate(const RunConfig& c) {
  if (c.cube_path.empty()) throw Error(ErrorCode::BadConfig, "no cube path (--cube)");
  if (c.labels_path.empty()) throw Error(ErrorCode::BadConfig, "no label path (--labels)");
  if (c.patch_size == 0 || c.patch_size % 2 == 0) throw Error(ErrorCode::BadConfig, "patch size must be odd");
  if (c.hidden_layers.empty()) throw Error(ErrorCode::BadConfig, "need at least one hidden layer");
  if (!(c.split_fraction > 0.0 && c.split_fraction < 1.0))
    throw Error(ErrorCode::BadConfig, "split_fraction must lie in (0, 1)");
  validate(c.mlp);
  validate(c.svm);
  (void)c.head_kind();
}

PreparedData prepare_data(const RunConfig& config) {
  PreparedData d;
  d.cube = normalize_cube(read_cube_file(config.cube_path), {config.per_band_normalize});
  d.labels = read_labels_file(config.labels_path);
  d.samples = build_samples(d.cube, d.labels, config.patch_size);
  d.split = split_samples(d.samples, config.split_fraction, config.seed);
  return d;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadConfig: return kBadConfig;
    case ErrorCode::Io: return kIoError;
    default: return kDataError;
  }
}

const std::vector<std::string>& bench_methods() {
  static const std::vector<std::string> methods{"MLP-SVM", "MLP-KNN", "MLP-RF", "MLP-DT", "SVM",
                                                "KNN",     "RF",      "DT",     "MLP"};
  return methods;
}

std::vector<BenchResult> run_bench(const RunConfig& config, std::ostream* log) {
  validate(config);
  const PreparedData data = prepare_data(config);
  const auto& samples = data.samples;
  const int classes = samples.num_classes;
  const bool weighted = config.weighted_macro;

  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); };

  const Matrix train_x = select_rows(samples.features, data.split.train);
  const Matrix test_x = select_rows(samples.features, data.split.test);
  const auto train_y = select(samples.labels, data.split.train);
  const auto test_y = select(samples.labels, data.split.test);

  // Shared MLP, trained once.
  const auto t_mlp = clock::now();
  const auto sizes = layer_sizes(config, static_cast<std::size_t>(samples.features.cols()), classes);
  auto mlp = train_mlp(init_mlp(sizes, config.seed), train_x, train_y, config.mlp_config());
  const double mlp_seconds = seconds_since(t_mlp);
  if (log) *log << "mlp: " << mlp.loss_history.size() << " epochs, final loss " << mlp.loss_history.back() << "\n";

  const SplitIndices head_split = head_split_for(samples, data.split, config.hybrid_options());
  const Matrix hidden_train = hidden_features(mlp.model, select_rows(samples.features, head_split.train));
  const Matrix hidden_test = hidden_features(mlp.model, select_rows(samples.features, head_split.test));
  const auto head_train_y = select(samples.labels, head_split.train);
  const auto head_test_y = select(samples.labels, head_split.test);

  std::vector<BenchResult> results;
  auto run = [&](const std::string& method, const std::function<MetricsReport()>& body) {
    BenchResult r;
    r.method = method;
    const auto t0 = clock::now();
    try {
      r.report = body();
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.seconds = seconds_since(t0);
    if (log) {
      *log << method << ": ";
      if (r.report) *log << "accuracy " << r.report->overall_accuracy;
      else *log << "FAILED " << r.error;
      *log << " (" << r.seconds << " s)\n";
    }
    results.push_back(std::move(r));
  };

  for (const char* kind : {"svm", "knn", "forest", "tree"}) {
    run(method_name(kind, true), [&] {
      const auto head = fit_head(hidden_train, head_train_y, classes, config.head_kind(kind), config.threads);
      return evaluate(head_test_y, predict_rows(hidden_test, [&](auto x) { return head_predict(head, x); }), classes,
                      weighted);
    });
  }
  for (const char* kind : {"svm", "knn", "forest", "tree"}) {
    run(method_name(kind, false), [&] {
      const auto head = fit_head(train_x, train_y, classes, config.head_kind(kind), config.threads);
      return evaluate(test_y, predict_rows(test_x, [&](auto x) { return head_predict(head, x); }), classes, weighted);
    });
  }
  run("MLP", [&] { return evaluate(test_y, mlp_predict(mlp.model, test_x), classes, weighted); });
  results.back().seconds += mlp_seconds;
  return results;
}

int cmd_train(const RunConfig& config, const std::string& model_path, std::ostream& log) {
  return guarded([&] {
    validate(config);
    log << "config:\n" << run_config_json(config) << "\n";
    const PreparedData data = prepare_data(config);
    log << "samples: " << data.samples.size() << " labeled pixels, " << data.split.train.size() << " train / "
        << data.split.test.size() << " test, " << data.samples.features.cols() << " features\n";
    const auto sizes = layer_sizes(config, static_cast<std::size_t>(data.samples.features.cols()),
                                   data.samples.num_classes);
    const auto fit = fit_hybrid(data.samples, data.split, sizes, config.mlp_config(), config.head_kind(),
                                config.hybrid_options());
    for (std::size_t e = 0; e < fit.mlp_loss_history.size(); ++e)
      log << "epoch " << (e + 1) << " loss " << fit.mlp_loss_history[e] << "\n";

    std::size_t correct = 0;
    for (auto i : fit.head_split.train)
      correct += hybrid_predict(fit.model, row_span(data.samples.features, static_cast<Eigen::Index>(i))) ==
                 data.samples.labels[i];
    log << "head " << config.head.kind << ": trained on " << fit.head_split.train.size() << " rows of "
        << fit.model.mlp.hidden_width() << " hidden features, train accuracy "
        << static_cast<double>(correct) / static_cast<double>(fit.head_split.train.size()) << "\n";
    if (auto* svm = std::get_if<MulticlassSvm>(&fit.model.head)) {
      std::size_t svs = 0;
      for (const auto& m : svm->machines)
        if (auto* d = std::get_if<DualSvm>(&m)) svs += static_cast<std::size_t>(d->support_vectors.rows());
      log << "head svm: " << svm->machines.size() << " one-vs-rest machines, " << svs << " support vectors\n";
    }
    write_file(model_path, save_hybrid(fit.model));
    log << "model written to " << model_path << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_eval(const RunConfig& config, const std::string& model_path, ReportFormat format, std::ostream& out) {
  return guarded([&] {
    validate(config);
    const HybridModel model = load_hybrid(read_file(model_path));
    const PreparedData data = prepare_data(config);
    if (model.mlp.input_dim() != static_cast<std::size_t>(data.samples.features.cols()))
      throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.mlp.input_dim()) +
                                                    " features, data has " +
                                                    std::to_string(data.samples.features.cols()));
    const SplitIndices head_split = head_split_for(data.samples, data.split, config.hybrid_options());
    std::vector<int> truth, preds;
    for (auto i : head_split.test) {
      truth.push_back(data.samples.labels[i]);
      preds.push_back(hybrid_predict(model, row_span(data.samples.features, static_cast<Eigen::Index>(i))));
    }
    const auto report = evaluate(truth, preds, data.samples.num_classes, config.weighted_macro);
    out << format_report(report, format, method_name(config.head.kind, true));
    return static_cast<int>(kOk);
  });
}

int cmd_bench(const RunConfig& config, ReportFormat format, std::ostream& out, std::ostream& log) {
  return guarded([&] {
    log << "config:\n" << run_config_json(config) << "\n";
    const auto results = run_bench(config, &log);
    std::vector<NamedReport> ok;
    bool failed = false;
    for (const auto& r : results) {
      if (r.report) ok.push_back({r.method, *r.report});
      else failed = true;
    }
    out << format_report(ok, format);
    if (format == ReportFormat::Table) {
      for (const auto& r : results) {
        if (!r.report) out << r.method << " FAILED: " << r.error << "\n";
      }
      out << "\nwall-clock seconds:";
      for (const auto& r : results) out << " " << r.method << "=" << r.seconds;
      out << "\n";
    }
    for (const auto& r : results)
      if (!r.report) std::cerr << "error: " << r.method << " failed: " << r.error << "\n";
    return static_cast<int>(failed ? kMethodFailed : kOk);
  });
}

int cmd_map(const RunConfig& config, const std::string& model_path, const std::string& out_prefix,
            const std::string& palette_path, std::ostream& log) {
  return guarded([&] {
    validate(config);
    const HybridModel model = load_hybrid(read_file(model_path));
    const HyperCube cube = normalize_cube(read_cube_file(config.cube_path), {config.per_band_normalize});
    const LabelMap labels = read_labels_file(config.labels_path);
    if (cube.lines() != labels.lines || cube.samples() != labels.samples)
      throw Error(ErrorCode::DimensionMismatch, "cube and label map differ in size");
    if (model.mlp.input_dim() != config.patch_size * config.patch_size * cube.bands())
      throw Error(ErrorCode::DimensionMismatch, "model input width does not match patch size x bands");

    Palette palette = default_palette(std::max(labels.num_classes, static_cast<int>(model.mlp.num_classes())));
    if (!palette_path.empty()) {
      const auto text = read_file(palette_path);
      palette = apply_palette_overrides(std::move(palette),
                                        std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
    }
    ClassGrid grid = predict_scene([&](std::span<const double> x) { return hybrid_predict(model, x); }, cube,
                                   config.patch_size, config.threads);
    if (config.mask_background) grid = mask_background(std::move(grid), labels);

    const std::string pred_path = out_prefix + "_prediction.ppm";
    const std::string gt_path = out_prefix + "_ground_truth.ppm";
    write_file(pred_path, render_ppm(grid, palette));
    write_file(gt_path, render_ground_truth(labels, palette));
    log << "wrote " << pred_path << " and " << gt_path << " (" << grid.samples << "x" << grid.lines << ")\n";
    return static_cast<int>(kOk);
  });
}

int cmd_gen_synthetic(std::size_t lines, std::size_t samples, std::size_t bands, int classes, std::uint64_t seed,
                      double sigma, const std::string& out_dir, std::ostream& log) {
  return guarded([&] {
    if (!(sigma >= 0.0)) throw Error(ErrorCode::BadConfig, "noise sigma must be non-negative");
    auto [cube, labels] = gen_synthetic_scene(lines, samples, bands, classes, seed, sigma);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create '" + out_dir + "': " + ec.message());
    const std::vector<std::size_t> cube_shape{lines, samples, bands};
    const std::vector<std::size_t> label_shape{lines, samples};
    const std::string cube_path = (std::filesystem::path(out_dir) / "cube.npy").string();
    const std::string labels_path = (std::filesystem::path(out_dir) / "labels.npy").string();
    write_file(cube_path, encode_npy_f64(cube_shape, cube.values));
    write_file(labels_path, encode_npy_i32(label_shape, labels.labels));
    log << "wrote " << cube_path << " and " << labels_path << "\n";
    return static_cast<int>(kOk);
  });
}

}  // namespace hsi
