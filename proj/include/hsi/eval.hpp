#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hsi {

// Rows are true classes, columns predicted classes, both 1-based in the API.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::uint64_t> counts;  // row-major num_classes x num_classes

  explicit ConfusionMatrix(int classes = 0)
      : num_classes(classes), counts(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0) {}

  std::uint64_t at(int truth, int predicted) const {
    return counts[static_cast<std::size_t>(truth - 1) * static_cast<std::size_t>(num_classes) +
                  static_cast<std::size_t>(predicted - 1)];
  }
  std::uint64_t total() const;
  std::uint64_t trace() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassMetrics {
  int class_id = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  std::uint64_t support = 0;  // true instances of the class
  // False when the class never occurs in truth or predictions; such
  // classes report zeros and are left out of macro means.
  bool defined = false;
};

struct MacroMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

struct MetricsReport {
  ConfusionMatrix matrix;
  double overall_accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f = 0.0;
  bool weighted = false;  // support-weighted instead of unweighted means
};

ConfusionMatrix build_confusion(std::span<const int> truth, std::span<const int> preds, int num_classes);
double overall_accuracy(const ConfusionMatrix& m);
ClassMetrics class_metrics(const ConfusionMatrix& m, int class_id);
MacroMetrics macro_average(std::span<const ClassMetrics> per_class);
MacroMetrics weighted_average(std::span<const ClassMetrics> per_class);

MetricsReport make_report(const ConfusionMatrix& m, bool weighted = false);

enum class ReportFormat { Table, Csv, JsonLines };

struct NamedReport {
  std::string method;
  MetricsReport report;
};

// Table: "Precision% Recall% F-score% Accuracy%" per method, two decimals.
// Csv: header plus one line per method. JsonLines: one object per method
// carrying the full matrix so parse_report_json_line restores everything.
std::string format_report(std::span<const NamedReport> reports, ReportFormat format);
std::string format_report(const MetricsReport& report, ReportFormat format, const std::string& method = "model");

NamedReport parse_report_json_line(const std::string& line);

}  // namespace hsi
