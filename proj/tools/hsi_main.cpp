#include "hsi/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> cube, labels, head, kernel;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> patch_size, epochs, batch_size;
  std::optional<double> lr;
  std::optional<std::vector<std::size_t>> hidden;
  bool paper_literal_resplit = false;
  bool per_band_normalize = false;
  bool weighted = false;
  bool mask_background = false;
  unsigned threads = 1;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--cube", o.cube, "hyperspectral cube (.npy or ENVI)");
  cmd->add_option("--labels", o.labels, "ground-truth label map (.npy or ENVI)");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--patch-size", o.patch_size, "odd spatial window size N");
  cmd->add_option("--head", o.head, "head classifier")->check(CLI::IsMember({"svm", "knn", "tree", "forest"}));
  cmd->add_option("--kernel", o.kernel, "SVM kernel")->check(CLI::IsMember({"linear", "rbf"}));
  cmd->add_option("--epochs", o.epochs, "MLP epochs");
  cmd->add_option("--lr", o.lr, "MLP learning rate");
  cmd->add_option("--batch-size", o.batch_size, "MLP minibatch size");
  cmd->add_option("--hidden", o.hidden, "hidden layer widths, e.g. --hidden 500 350 250");
  cmd->add_option("--threads", o.threads, "worker threads (results do not depend on it)");
  cmd->add_flag("--paper-literal-resplit", o.paper_literal_resplit, "fit the head on a fresh split");
  cmd->add_flag("--per-band-normalize", o.per_band_normalize, "min-max scale each band separately");
  cmd->add_flag("--weighted", o.weighted, "support-weighted macro averages");
  cmd->add_flag("--mask-background", o.mask_background, "render unlabeled pixels black");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw hsi::Error(hsi::ErrorCode::Io, "cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// JSON first, then flags on top.
hsi::RunConfig resolve(const Overrides& o) {
  hsi::RunConfig c;
  if (!o.config_path.empty()) c = hsi::parse_run_config(slurp(o.config_path));
  if (o.cube) c.cube_path = *o.cube;
  if (o.labels) c.labels_path = *o.labels;
  if (o.seed) c.seed = *o.seed;
  if (o.patch_size) c.patch_size = *o.patch_size;
  if (o.head) c.head.kind = *o.head;
  if (o.kernel) c.svm.kernel.kind = *o.kernel == "linear" ? hsi::KernelKind::Linear : hsi::KernelKind::Rbf;
  if (o.epochs) c.mlp.epochs = *o.epochs;
  if (o.lr) c.mlp.learning_rate = *o.lr;
  if (o.batch_size) c.mlp.batch_size = *o.batch_size;
  if (o.hidden) c.hidden_layers = *o.hidden;
  c.paper_literal_resplit |= o.paper_literal_resplit;
  c.per_band_normalize |= o.per_band_normalize;
  c.weighted_macro |= o.weighted;
  c.mask_background |= o.mask_background;
  c.threads = o.threads;
  return c;
}

hsi::ReportFormat parse_format(const std::string& s) {
  static const std::map<std::string, hsi::ReportFormat> formats{
      {"table", hsi::ReportFormat::Table}, {"csv", hsi::ReportFormat::Csv}, {"json-lines", hsi::ReportFormat::JsonLines}};
  return formats.at(s);
}

// Report goes to --out when given, stdout otherwise.
template <typename F>
int with_report_stream(const std::string& out_path, F&& body) {
  if (out_path.empty()) return body(std::cout);
  std::ostringstream buffer;
  const int code = body(buffer);
  std::ofstream out(out_path, std::ios::binary);
  out << buffer.str();
  if (!out) {
    std::cerr << "error: Io: cannot write '" << out_path << "'\n";
    return hsi::kIoError;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral pixel classification: MLP features with classical heads"};
  app.require_subcommand(1);

  Overrides o;
  std::string model_path = "hybrid.model";
  std::string out;
  std::string format = "table";
  std::string palette;

  auto* train = app.add_subcommand("train", "train the MLP and head, write a model file");
  add_run_options(train, o);
  train->add_option("--model,--out", model_path, "model file to write");

  auto* eval = app.add_subcommand("eval", "score a model on the test split");
  add_run_options(eval, o);
  eval->add_option("--model", model_path, "model file")->required();
  eval->add_option("--format", format)->check(CLI::IsMember({"table", "csv", "json-lines"}));
  eval->add_option("--out", out, "write the report here instead of stdout");

  auto* bench = app.add_subcommand("bench", "train and score all nine methods on one split");
  add_run_options(bench, o);
  bench->add_option("--format", format)->check(CLI::IsMember({"table", "csv", "json-lines"}));
  bench->add_option("--out", out, "write the report here instead of stdout");

  auto* map = app.add_subcommand("map", "render prediction and ground-truth maps as PPM");
  add_run_options(map, o);
  map->add_option("--model", model_path, "model file")->required();
  map->add_option("--out", out, "output prefix")->required();
  map->add_option("--palette", palette, "palette override file");

  std::size_t lines = 20, samples = 20, bands = 8;
  int classes = 4;
  std::uint64_t gen_seed = 42;
  double sigma = 0.05;
  auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic labeled scene as NPY");
  gen->add_option("--lines", lines);
  gen->add_option("--samples", samples);
  gen->add_option("--bands", bands);
  gen->add_option("--classes", classes);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--sigma", sigma, "per-band noise standard deviation");
  gen->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return hsi::kBadConfig;
  }

  if (gen->parsed()) return hsi::cmd_gen_synthetic(lines, samples, bands, classes, gen_seed, sigma, out, std::cerr);

  hsi::RunConfig config;
  try {
    config = resolve(o);
  } catch (const hsi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hsi::exit_code_for(e.code());
  }

  if (train->parsed()) return hsi::cmd_train(config, model_path, std::cerr);
  if (eval->parsed())
    return with_report_stream(out, [&](std::ostream& s) {
      return hsi::cmd_eval(config, model_path, parse_format(format), s);
    });
  if (bench->parsed())
    return with_report_stream(out, [&](std::ostream& s) {
      return hsi::cmd_bench(config, parse_format(format), s, std::cerr);
    });
  return hsi::cmd_map(config, model_path, out, palette, std::cerr);
}
