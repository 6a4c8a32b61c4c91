#pragma once

#include "hsi/data.hpp"
#include "hsi/error.hpp"
#include "hsi/eval.hpp"
#include "hsi/hybrid.hpp"
#include "hsi/mlp.hpp"
#include "hsi/svm.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hsi {

struct HeadSettings {
  std::string kind = "svm";  // svm | knn | tree | forest
  std::size_t knn_k = 5;
  std::size_t tree_max_depth = 20;
  std::size_t tree_min_samples_split = 2;
  std::size_t forest_trees = 50;
  std::size_t forest_m_try = 0;
};

struct RunConfig {
  std::string cube_path;
  std::string labels_path;
  std::size_t patch_size = 1;
  std::uint64_t seed = 42;
  std::vector<std::size_t> hidden_layers{500, 350, 250};
  MlpTrainConfig mlp;
  SvmTrainConfig svm;
  HeadSettings head;
  double split_fraction = 0.8;
  bool paper_literal_resplit = false;
  bool per_band_normalize = false;
  bool weighted_macro = false;
  bool mask_background = false;
  unsigned threads = 1;  // not part of the JSON document; results do not depend on it

  // Component seeds all follow the run seed.
  MlpTrainConfig mlp_config() const;
  SvmTrainConfig svm_config() const;
  HeadKind head_kind(const std::string& kind) const;
  HeadKind head_kind() const { return head_kind(head.kind); }
  HybridOptions hybrid_options() const;
};

// JSON keys: cube_path, labels_path, patch_size, seed, mlp, svm, head,
// split_fraction, paper_literal_resplit, per_band_normalize, weighted_macro,
// mask_background. Unknown keys are rejected.
RunConfig parse_run_config(const std::string& json_text, RunConfig base = {});
std::string run_config_json(const RunConfig& config);
void validate(const RunConfig& config);

struct PreparedData {
  HyperCube cube;  // normalized
  LabelMap labels;
  SampleSet samples;
  SplitIndices split;
};

PreparedData prepare_data(const RunConfig& config);

struct BenchResult {
  std::string method;
  std::optional<MetricsReport> report;  // empty when the method failed
  std::string error;
  double seconds = 0.0;
};

// Method rows in reporting order.
const std::vector<std::string>& bench_methods();

// All nine methods on one split; the four hybrid rows share one MLP.
std::vector<BenchResult> run_bench(const RunConfig& config, std::ostream* log = nullptr);

// Process exit codes.
enum ExitCode : int { kOk = 0, kBadConfig = 1, kIoError = 2, kDataError = 3, kMethodFailed = 4 };
int exit_code_for(ErrorCode code);

// Commands write artifacts to disk, reports to `out`, progress to `log`.
int cmd_train(const RunConfig& config, const std::string& model_path, std::ostream& log);
int cmd_eval(const RunConfig& config, const std::string& model_path, ReportFormat format, std::ostream& out);
int cmd_bench(const RunConfig& config, ReportFormat format, std::ostream& out, std::ostream& log);
// Writes <out_prefix>_prediction.ppm and <out_prefix>_ground_truth.ppm.
int cmd_map(const RunConfig& config, const std::string& model_path, const std::string& out_prefix,
            const std::string& palette_path, std::ostream& log);
// Writes <out_dir>/cube.npy and <out_dir>/labels.npy.
int cmd_gen_synthetic(std::size_t lines, std::size_t samples, std::size_t bands, int classes, std::uint64_t seed,
                      double sigma, const std::string& out_dir, std::ostream& log);

}  // namespace hsi
