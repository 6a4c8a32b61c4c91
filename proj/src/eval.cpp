#include "hsi/eval.hpp"

#include "hsi/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <numeric>
#include <sstream>

namespace hsi {

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (int c = 1; c <= num_classes; ++c) t += at(c, c);
  return t;
}

ConfusionMatrix build_confusion(std::span<const int> truth, std::span<const int> preds, int num_classes) {
  if (truth.size() != preds.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(truth.size()) + " truths vs " +
                                               std::to_string(preds.size()) + " predictions");
  ConfusionMatrix m(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = preds[i];
    if (t < 1 || t > num_classes || p < 1 || p > num_classes)
      throw Error(ErrorCode::LabelOutOfRange, "pair (" + std::to_string(t) + ", " + std::to_string(p) +
                                                  ") outside [1, " + std::to_string(num_classes) + "]");
    ++m.counts[static_cast<std::size_t>(t - 1) * static_cast<std::size_t>(num_classes) + static_cast<std::size_t>(p - 1)];
  }
  return m;
}

double overall_accuracy(const ConfusionMatrix& m) {
  const auto total = m.total();
  if (total == 0) throw Error(ErrorCode::EmptyMatrix, "no samples in the confusion matrix");
  return static_cast<double>(m.trace()) / static_cast<double>(total);
}

ClassMetrics class_metrics(const ConfusionMatrix& m, int c) {
  if (c < 1 || c > m.num_classes) throw Error(ErrorCode::ClassOutOfRange, "class " + std::to_string(c));
  std::uint64_t row = 0, col = 0;
  for (int k = 1; k <= m.num_classes; ++k) {
    row += m.at(c, k);
    col += m.at(k, c);
  }
  const std::uint64_t tp = m.at(c, c);
  const std::uint64_t fp = col - tp;
  const std::uint64_t fn = row - tp;
  auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  ClassMetrics out;
  out.class_id = c;
  out.support = row;
  out.precision = ratio(tp, tp + fp);
  out.recall = ratio(tp, tp + fn);
  out.f_score = ratio(2 * tp, 2 * tp + fp + fn);
  out.defined = tp + fp + fn > 0;
  return out;
}

MacroMetrics macro_average(std::span<const ClassMetrics> per_class) {
  MacroMetrics out;
  std::size_t n = 0;
  for (const auto& c : per_class) {
    if (!c.defined) continue;
    out.precision += c.precision;
    out.recall += c.recall;
    out.f_score += c.f_score;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::NoDefinedClasses, "no class has defined metrics");
  out.precision /= static_cast<double>(n);
  out.recall /= static_cast<double>(n);
  out.f_score /= static_cast<double>(n);
  return out;
}

MacroMetrics weighted_average(std::span<const ClassMetrics> per_class) {
  MacroMetrics out;
  std::uint64_t total = 0;
  for (const auto& c : per_class) {
    if (!c.defined) continue;
    const double w = static_cast<double>(c.support);
    out.precision += w * c.precision;
    out.recall += w * c.recall;
    out.f_score += w * c.f_score;
    total += c.support;
  }
  if (total == 0) throw Error(ErrorCode::NoDefinedClasses, "no class has support");
  out.precision /= static_cast<double>(total);
  out.recall /= static_cast<double>(total);
  out.f_score /= static_cast<double>(total);
  return out;
}

MetricsReport make_report(const ConfusionMatrix& m, bool weighted) {
  MetricsReport r;
  r.matrix = m;
  r.weighted = weighted;
  r.overall_accuracy = overall_accuracy(m);
  for (int c = 1; c <= m.num_classes; ++c) r.per_class.push_back(class_metrics(m, c));
  const auto avg = weighted ? weighted_average(r.per_class) : macro_average(r.per_class);
  r.macro_precision = avg.precision;
  r.macro_recall = avg.recall;
  r.macro_f = avg.f_score;
  return r;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%6.2f", 100.0 * v);
  return buf;
}

nlohmann::json to_json(const NamedReport& nr) {
  const auto& r = nr.report;
  nlohmann::json j;
  j["method"] = nr.method;
  j["precision"] = r.macro_precision;
  j["recall"] = r.macro_recall;
  j["f_score"] = r.macro_f;
  j["accuracy"] = r.overall_accuracy;
  j["weighted"] = r.weighted;
  j["num_classes"] = r.matrix.num_classes;
  j["confusion"] = r.matrix.counts;
  auto& pc = j["per_class"] = nlohmann::json::array();
  for (const auto& c : r.per_class)
    pc.push_back({{"class", c.class_id}, {"precision", c.precision}, {"recall", c.recall},
                  {"f_score", c.f_score}, {"support", c.support}, {"defined", c.defined}});
  return j;
}

}  // namespace

std::string format_report(std::span<const NamedReport> reports, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Table: {
      char line[128];
      std::snprintf(line, sizeof line, "%-10s %10s %10s %10s %10s\n", "Method", "Precision%", "Recall%", "F-score%",
                    "Accuracy%");
      out << line;
      for (const auto& nr : reports) {
        const auto& r = nr.report;
        std::snprintf(line, sizeof line, "%-10s %10s %10s %10s %10s\n", nr.method.c_str(), pct(r.macro_precision).c_str(),
                      pct(r.macro_recall).c_str(), pct(r.macro_f).c_str(), pct(r.overall_accuracy).c_str());
        out << line;
      }
      break;
    }
    case ReportFormat::Csv: {
      out << "method,precision,recall,f_score,accuracy\n";
      char line[160];
      for (const auto& nr : reports) {
        const auto& r = nr.report;
        std::snprintf(line, sizeof line, "%s,%.2f,%.2f,%.2f,%.2f\n", nr.method.c_str(), 100.0 * r.macro_precision,
                      100.0 * r.macro_recall, 100.0 * r.macro_f, 100.0 * r.overall_accuracy);
        out << line;
      }
      break;
    }
    case ReportFormat::JsonLines:
      for (const auto& nr : reports) out << to_json(nr).dump() << "\n";
      break;
  }
  return out.str();
}

std::string format_report(const MetricsReport& report, ReportFormat format, const std::string& method) {
  const NamedReport nr{method, report};
  return format_report(std::span(&nr, 1), format);
}

NamedReport parse_report_json_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("bad report line: ") + e.what());
  }
  NamedReport nr;
  nr.method = j.at("method").get<std::string>();
  auto& r = nr.report;
  r.matrix = ConfusionMatrix(j.at("num_classes").get<int>());
  r.matrix.counts = j.at("confusion").get<std::vector<std::uint64_t>>();
  r.macro_precision = j.at("precision").get<double>();
  r.macro_recall = j.at("recall").get<double>();
  r.macro_f = j.at("f_score").get<double>();
  r.overall_accuracy = j.at("accuracy").get<double>();
  r.weighted = j.at("weighted").get<bool>();
  for (const auto& c : j.at("per_class")) {
    r.per_class.push_back({c.at("class").get<int>(), c.at("precision").get<double>(), c.at("recall").get<double>(),
                           c.at("f_score").get<double>(), c.at("support").get<std::uint64_t>(),
                           c.at("defined").get<bool>()});
  }
  return nr;
}

}  // namespace hsi
