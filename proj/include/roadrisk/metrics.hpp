#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace roadrisk {

/// K x K integer counts; rows index ground truth, columns index prediction.
struct ConfusionMatrix {
  std::vector<std::string> classes;    // length K
  std::vector<std::uint64_t> counts;   // K*K, row-major

  std::size_t size() const { return classes.size(); }
  std::uint64_t& at(std::size_t truth, std::size_t predicted) {
    return counts[truth * size() + predicted];
  }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts[truth * size() + predicted];
  }
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t column_sum(std::size_t predicted) const;
  std::uint64_t trace() const;
  std::uint64_t total() const;
};

/// Counts (truth, prediction) pairs. `class_names` is optional cosmetics;
/// when empty, classes are named "class_0" .. "class_{K-1}".
/// Throws std::invalid_argument on length mismatch, an index >= K, or a
/// class-name list whose length differs from K.
ConfusionMatrix confusion(std::span<const std::size_t> truth,
                          std::span<const std::size_t> predictions, std::size_t class_count,
                          std::vector<std::string> class_names = {});

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  /// True when a zero denominator forced precision, recall or f1 to the
  /// 0-by-convention value.
  bool degenerate = false;
};

struct ClassReport {
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::uint64_t total = 0;
  double accuracy = 0.0;  // trace / total
  bool degenerate = false;  // any per-class flag, or an empty matrix
};

/// precision_c = M[c,c] / column_sum(c); recall_c = M[c,c] / row_sum(c);
/// f1_c = harmonic mean of the unrounded pair; macro values are unweighted
/// class means. Zero denominators yield 0 and set the degeneracy flags.
ClassReport report(const ConfusionMatrix& matrix);

struct RowFractions {
  std::size_t size = 0;
  std::vector<double> fractions;   // K*K, row-major; rows sum to 1 or 0
  std::vector<bool> zero_rows;     // per-row flag for empty (untouched) rows
  bool has_zero_rows = false;

  double at(std::size_t truth, std::size_t predicted) const {
    return fractions[truth * size + predicted];
  }
};

RowFractions row_normalize(const ConfusionMatrix& matrix);

/// Plain-text table with columns Classifier | Classes | Precision | Recall |
/// F1 | Support plus a macro-avg row, metrics printed at 2 decimals.
std::string render_report(std::string_view classifier, const ClassReport& rep);

/// The same values as a single-line JSON object (full double precision).
std::string report_json(std::string_view classifier, const ClassReport& rep);

}  // namespace roadrisk
