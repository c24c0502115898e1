#include "roadrisk/metrics.hpp"

#include <algorithm>
#include <array>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace roadrisk {

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t sum = 0;
  for (std::size_t j = 0; j < size(); ++j) sum += at(truth, j);
  return sum;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < size(); ++i) sum += at(i, predicted);
  return sum;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < size(); ++i) sum += at(i, i);
  return sum;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t sum = 0;
  for (std::uint64_t c : counts) sum += c;
  return sum;
}

ConfusionMatrix confusion(std::span<const std::size_t> truth,
                          std::span<const std::size_t> predictions, std::size_t class_count,
                          std::vector<std::string> class_names) {
  if (truth.size() != predictions.size()) {
    throw std::invalid_argument("truth and prediction lists differ in length");
  }
  if (class_count == 0) throw std::invalid_argument("class count must be positive");
  if (!class_names.empty() && class_names.size() != class_count) {
    throw std::invalid_argument("class name list length differs from class count");
  }

  ConfusionMatrix m;
  if (class_names.empty()) {
    for (std::size_t c = 0; c < class_count; ++c) {
      m.classes.push_back("class_" + std::to_string(c));
    }
  } else {
    m.classes = std::move(class_names);
  }
  m.counts.assign(class_count * class_count, 0);

  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= class_count || predictions[i] >= class_count) {
      throw std::invalid_argument("class index out of range at sample " + std::to_string(i));
    }
    ++m.at(truth[i], predictions[i]);
  }
  return m;
}

ClassReport report(const ConfusionMatrix& matrix) {
  ClassReport rep;
  const std::size_t k = matrix.size();
  rep.total = matrix.total();

  double precision_sum = 0.0;
  double recall_sum = 0.0;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics cm;
    cm.name = matrix.classes[c];
    cm.support = matrix.row_sum(c);
    const std::uint64_t correct = matrix.at(c, c);
    const std::uint64_t predicted = matrix.column_sum(c);

    if (predicted == 0) {
      cm.degenerate = true;
    } else {
      cm.precision = static_cast<double>(correct) / static_cast<double>(predicted);
    }
    if (cm.support == 0) {
      cm.degenerate = true;
    } else {
      cm.recall = static_cast<double>(correct) / static_cast<double>(cm.support);
    }
    if (cm.precision + cm.recall == 0.0) {
      cm.degenerate = true;
    } else {
      cm.f1 = 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall);
    }

    precision_sum += cm.precision;
    recall_sum += cm.recall;
    f1_sum += cm.f1;
    rep.degenerate = rep.degenerate || cm.degenerate;
    rep.per_class.push_back(std::move(cm));
  }

  if (k > 0) {
    rep.macro_precision = precision_sum / static_cast<double>(k);
    rep.macro_recall = recall_sum / static_cast<double>(k);
    rep.macro_f1 = f1_sum / static_cast<double>(k);
  } else {
    rep.degenerate = true;
  }
  if (rep.total > 0) {
    rep.accuracy = static_cast<double>(matrix.trace()) / static_cast<double>(rep.total);
  } else {
    rep.degenerate = true;
  }
  return rep;
}

RowFractions row_normalize(const ConfusionMatrix& matrix) {
  const std::size_t k = matrix.size();
  RowFractions out;
  out.size = k;
  out.fractions.assign(k * k, 0.0);
  out.zero_rows.assign(k, false);
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint64_t sum = matrix.row_sum(i);
    if (sum == 0) {
      out.zero_rows[i] = true;
      out.has_zero_rows = true;
      continue;
    }
    for (std::size_t j = 0; j < k; ++j) {
      out.fractions[i * k + j] =
          static_cast<double>(matrix.at(i, j)) / static_cast<double>(sum);
    }
  }
  return out;
}

namespace {

std::string fixed2(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

}  // namespace

std::string render_report(std::string_view classifier, const ClassReport& rep) {
  using Row = std::array<std::string, 6>;
  std::vector<Row> rows;
  rows.push_back({"Classifier", "Classes", "Precision", "Recall", "F1", "Support"});
  bool first = true;
  for (const ClassMetrics& cm : rep.per_class) {
    rows.push_back({first ? std::string(classifier) : std::string(), cm.name,
                    fixed2(cm.precision), fixed2(cm.recall), fixed2(cm.f1),
                    std::to_string(cm.support)});
    first = false;
  }
  rows.push_back({std::string(), "macro-avg", fixed2(rep.macro_precision),
                  fixed2(rep.macro_recall), fixed2(rep.macro_f1), std::to_string(rep.total)});

  std::size_t widths[6] = {};
  for (const Row& row : rows) {
    for (int c = 0; c < 6; ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::size_t line_len = 0;
  for (std::size_t w : widths) line_len += w + 2;

  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (int c = 0; c < 6; ++c) {
      std::string cell = rows[r][c];
      cell.resize(widths[c] + 2, ' ');
      line += cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line;
    out += '\n';
    if (r == 0) {
      out += std::string(line_len - 2, '-');
      out += '\n';
    }
  }
  return out;
}

std::string report_json(std::string_view classifier, const ClassReport& rep) {
  nlohmann::json j;
  j["classifier"] = std::string(classifier);
  j["classes"] = nlohmann::json::array();
  for (const ClassMetrics& cm : rep.per_class) {
    j["classes"].push_back({{"name", cm.name},
                            {"precision", cm.precision},
                            {"recall", cm.recall},
                            {"f1", cm.f1},
                            {"support", cm.support},
                            {"degenerate", cm.degenerate}});
  }
  j["macro"] = {{"precision", rep.macro_precision},
                {"recall", rep.macro_recall},
                {"f1", rep.macro_f1}};
  j["total"] = rep.total;
  j["accuracy"] = rep.accuracy;
  j["degenerate"] = rep.degenerate;
  return j.dump();
}

}  // namespace roadrisk
