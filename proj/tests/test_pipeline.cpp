#include "hsi/error.hpp"
#include "hsi/pipeline.hpp"
#include "hsi/render.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <sys/wait.h>

using namespace hsi;
namespace fs = std::filesystem;

namespace {

// Writes the 20x20x8, 4-class scene once per directory.
std::string scene_dir(const std::string& name, std::uint64_t seed = 42) {
  const fs::path dir = fs::current_path() / name;
  if (!fs::exists(dir / "labels.npy")) {
    std::ostringstream log;
    REQUIRE(cmd_gen_synthetic(20, 20, 8, 4, seed, 0.05, dir.string(), log) == kOk);
  }
  return dir.string();
}

RunConfig small_config(const std::string& dir) {
  RunConfig c;
  c.cube_path = dir + "/cube.npy";
  c.labels_path = dir + "/labels.npy";
  c.hidden_layers = {32, 16, 8};
  c.mlp.epochs = 60;
  c.mlp.batch_size = 16;
  c.mlp.learning_rate = 0.05;
  c.head.forest_trees = 10;
  return c;
}

std::string slurp(const std::string& path) {
  const auto b = read_file(path);
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HSI_CLI_PATH) + " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config JSON round-trips and rejects unknown keys") {
  RunConfig c;
  c.cube_path = "a.npy";
  c.labels_path = "b.npy";
  c.patch_size = 3;
  c.seed = 9;
  c.hidden_layers = {10, 5};
  c.svm.kernel.kind = KernelKind::Linear;
  c.head.kind = "forest";
  c.head.forest_trees = 7;
  c.weighted_macro = true;
  const auto back = parse_run_config(run_config_json(c));
  CHECK(run_config_json(back) == run_config_json(c));

  CHECK(parse_run_config(R"({"head": "knn"})").head.kind == "knn");
  CHECK_THROWS_AS(parse_run_config(R"({"heads": "knn"})"), Error);
  CHECK_THROWS_AS(parse_run_config(R"({"mlp": {"momentum": 0.9}})"), Error);
  CHECK_THROWS_AS(parse_run_config(R"({"svm": {"kernel": "poly"}})"), Error);
  CHECK_THROWS_AS(parse_run_config("{not json"), Error);
}

TEST_CASE("validation") {
  RunConfig c;
  c.cube_path = "a";
  c.labels_path = "b";
  validate(c);
  c.patch_size = 2;
  CHECK_THROWS_AS(validate(c), Error);
  c.patch_size = 1;
  c.head.kind = "lasso";
  CHECK_THROWS_AS(validate(c), Error);
  c.head.kind = "svm";
  c.split_fraction = 1.0;
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ErrorCode::BadConfig) == 1);
  CHECK(exit_code_for(ErrorCode::Io) == 2);
  CHECK(exit_code_for(ErrorCode::DimensionMismatch) == 3);
  CHECK(exit_code_for(ErrorCode::BadMagic) == 3);
}

TEST_CASE("train, eval and bench agree") {
  const auto dir = scene_dir("scene_pipeline");
  const auto cfg = small_config(dir);
  std::ostringstream log;
  REQUIRE(cmd_train(cfg, "pipeline_a.model", log) == kOk);
  const auto text = log.str();
  CHECK(text.find("epoch 60 loss") != std::string::npos);
  CHECK(text.find("head svm") != std::string::npos);
  CHECK(text.find("\"hidden_layers\"") != std::string::npos);

  std::ostringstream log2;
  REQUIRE(cmd_train(cfg, "pipeline_b.model", log2) == kOk);
  CHECK(slurp("pipeline_a.model") == slurp("pipeline_b.model"));

  std::ostringstream json1, json2;
  REQUIRE(cmd_eval(cfg, "pipeline_a.model", ReportFormat::JsonLines, json1) == kOk);
  REQUIRE(cmd_eval(cfg, "pipeline_b.model", ReportFormat::JsonLines, json2) == kOk);
  CHECK(json1.str() == json2.str());
  const auto evaluated = parse_report_json_line(json1.str().substr(0, json1.str().find('\n')));
  CHECK(evaluated.method == "MLP-SVM");

  const auto bench = run_bench(cfg);
  REQUIRE(bench.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(bench[i].method == bench_methods()[i]);
    CHECK(bench[i].report.has_value());
  }
  CHECK(bench[0].report->matrix == evaluated.report.matrix);
  CHECK(bench[0].report->overall_accuracy == evaluated.report.overall_accuracy);
  CHECK(bench[0].report->overall_accuracy >= bench[4].report->overall_accuracy - 0.02);
}

TEST_CASE("bench csv output is stable and has nine rows") {
  const auto dir = scene_dir("scene_pipeline");
  const auto cfg = small_config(dir);
  std::ostringstream a, b, log;
  REQUIRE(cmd_bench(cfg, ReportFormat::Csv, a, log) == kOk);
  REQUIRE(cmd_bench(cfg, ReportFormat::Csv, b, log) == kOk);
  CHECK(a.str() == b.str());
  std::istringstream in(a.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (n > 0) CHECK(std::count(line.begin(), line.end(), ',') == 4);
    ++n;
  }
  CHECK(n == 10);
}

TEST_CASE("bench reports a failing method and keeps going") {
  const auto dir = scene_dir("scene_pipeline");
  auto cfg = small_config(dir);
  cfg.head.knn_k = 100000;
  std::ostringstream out, log;
  CHECK(cmd_bench(cfg, ReportFormat::Table, out, log) == kMethodFailed);
  CHECK(out.str().find("MLP-KNN FAILED") != std::string::npos);
  CHECK(out.str().find("MLP-SVM ") != std::string::npos);
}

TEST_CASE("maps: size, masking, map/eval consistency") {
  const auto dir = scene_dir("scene_pipeline");
  auto cfg = small_config(dir);
  std::ostringstream log;
  REQUIRE(cmd_train(cfg, "pipeline_map.model", log) == kOk);
  REQUIRE(cmd_map(cfg, "pipeline_map.model", "pipeline_map", "", log) == kOk);
  const auto pred = slurp("pipeline_map_prediction.ppm");
  const auto truth = slurp("pipeline_map_ground_truth.ppm");
  CHECK(pred.rfind("P6\n20 20\n255\n", 0) == 0);
  CHECK(pred.size() == truth.size());

  // Labeled pixels in the map equal per-sample predictions.
  const auto model = load_hybrid(read_file("pipeline_map.model"));
  const auto data = prepare_data(cfg);
  const auto palette = default_palette(4);
  const std::size_t off = std::string("P6\n20 20\n255\n").size();
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto [r, c] = data.samples.coords[i];
    const int p = hybrid_predict(model, row_span(data.samples.features, static_cast<Eigen::Index>(i)));
    const auto& rgb = palette.colors[static_cast<std::size_t>(p)];
    const std::size_t at = off + 3 * (r * 20 + c);
    CHECK(static_cast<std::uint8_t>(pred[at]) == rgb[0]);
    CHECK(static_cast<std::uint8_t>(pred[at + 2]) == rgb[2]);
  }

  cfg.mask_background = true;
  REQUIRE(cmd_map(cfg, "pipeline_map.model", "pipeline_masked", "", log) == kOk);
  const auto masked = slurp("pipeline_masked_prediction.ppm");
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t c = 0; c < 20; ++c)
      if (data.labels.at(r, c) == 0)
        for (std::size_t k = 0; k < 3; ++k) CHECK(masked[off + 3 * (r * 20 + c) + k] == '\0');
}

TEST_CASE("default run on the seed 42 scene reproduces the golden map") {
  const auto dir = scene_dir("scene_golden");
  RunConfig cfg;
  cfg.cube_path = dir + "/cube.npy";
  cfg.labels_path = dir + "/labels.npy";
  std::ostringstream log;
  REQUIRE(cmd_train(cfg, "golden.model", log) == kOk);
  REQUIRE(cmd_map(cfg, "golden.model", "golden", "", log) == kOk);
  CHECK(slurp("golden_prediction.ppm") == slurp(std::string(HSI_GOLDEN_DIR) + "/synthetic_seed42_prediction.ppm"));
}

TEST_CASE("eval on mismatched data fails with a data error") {
  const auto dir = scene_dir("scene_pipeline");
  auto cfg = small_config(dir);
  std::ostringstream log;
  REQUIRE(cmd_train(cfg, "pipeline_dim.model", log) == kOk);
  cfg.patch_size = 3;
  std::ostringstream out;
  CHECK(cmd_eval(cfg, "pipeline_dim.model", ReportFormat::Table, out) == kDataError);
}

TEST_CASE("command line") {
  const auto dir = scene_dir("scene_cli");
  CHECK(run_cli("train --cube " + dir + "/missing.npy --labels " + dir + "/labels.npy --model x.model") == 2);
  CHECK(run_cli("bench --no-such-flag") == 1);
  CHECK(run_cli("train --cube a --labels b --head lasso") == 1);

  // JSON config with a flag on top.
  {
    RunConfig c = small_config(dir);
    c.head.kind = "tree";
    const auto text = run_config_json(c);
    write_file("cli_config.json", std::as_bytes(std::span(text.data(), text.size())));
  }
  REQUIRE(run_cli("train --config cli_config.json --head knn --model cli.model") == 0);
  const auto log = slurp("cli_stderr.txt");
  CHECK(log.find("\"kind\": \"knn\"") != std::string::npos);
  REQUIRE(run_cli("eval --config cli_config.json --head knn --model cli.model --format table") == 0);
  CHECK(slurp("cli_stdout.txt").find("MLP-KNN") != std::string::npos);
  REQUIRE(run_cli("map --config cli_config.json --model cli.model --out cli_map --mask-background") == 0);
  CHECK(fs::exists("cli_map_prediction.ppm"));
  CHECK(run_cli("map --config cli_config.json --model cli.model --out /nonexistent_dir/x") == 2);
}

}  // TEST_SUITE
