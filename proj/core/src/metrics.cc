#include "jointgrade/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "jointgrade/error.h"

namespace jointgrade {

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ConfusionMatrix confusion_matrix(std::span<const int> preds, std::span<const int> labels,
                                 std::size_t classes) {
  if (preds.size() != labels.size()) {
    throw ContractError("confusion_matrix: " + std::to_string(preds.size()) + " predictions vs " +
                        std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix cm{classes, std::vector<std::uint64_t>(classes * classes, 0)};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || labels[i] < 0 || static_cast<std::size_t>(preds[i]) >= classes ||
        static_cast<std::size_t>(labels[i]) >= classes) {
      throw IndexError("confusion_matrix: entry " + std::to_string(i) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
    cm.counts[static_cast<std::size_t>(labels[i]) * classes + static_cast<std::size_t>(preds[i])] += 1;
  }
  return cm;
}

ClassificationMetrics classification_metrics(const ConfusionMatrix& confusion) {
  const std::uint64_t n = confusion.total();
  if (n == 0) throw ContractError("classification_metrics: empty confusion matrix");
  const std::size_t c = confusion.classes;

  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  double trace = 0.0, f1_sum = 0.0, recall_sum = 0.0, precision_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < c; ++k) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      row += static_cast<double>(confusion.at(k, j));
      col += static_cast<double>(confusion.at(j, k));
    }
    const double tp = static_cast<double>(confusion.at(k, k));
    trace += tp;
    if (row == 0.0 && col == 0.0) continue;
    ++present;
    const double precision = ratio(tp, col);
    const double recall = ratio(tp, row);
    precision_sum += precision;
    recall_sum += recall;
    f1_sum += ratio(2.0 * precision * recall, precision + recall);
  }
  const double classes_present = static_cast<double>(present);
  return {trace / static_cast<double>(n), f1_sum / classes_present, recall_sum / classes_present,
          precision_sum / classes_present};
}

double binary_auc(std::span<const double> scores, std::span<const int> labels, int positive_class) {
  if (scores.size() != labels.size()) throw ShapeError("binary_auc", {scores.size()}, {labels.size()});
  // Rank-sum with midranks for ties.
  const std::size_t m = scores.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && scores[order[j + 1]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j+1 share their mean.
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == positive_class) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j + 1;
  }
  const std::size_t negatives = m - positives;
  if (positives == 0 || negatives == 0) return std::numeric_limits<double>::quiet_NaN();
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

AucResult macro_auc_ovr(std::span<const double> scores, std::span<const int> labels,
                        std::size_t classes) {
  const std::size_t m = labels.size();
  if (scores.size() != m * classes) {
    throw ShapeError("macro_auc_ovr", {scores.size()}, {m, classes});
  }
  AucResult result;
  result.per_class.assign(classes, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> column(m);
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < m; ++i) {
      column[i] = scores[i * classes + c];
    }
    const double auc = binary_auc(column, labels, static_cast<int>(c));
    if (std::isnan(auc)) {
      result.skipped.push_back(c);
      continue;
    }
    result.per_class[c] = auc;
    total += auc;
    ++counted;
  }
  if (counted == 0) throw UndefinedAucError("macro_auc_ovr: no class has both positives and negatives");
  result.macro_auc = total / static_cast<double>(counted);
  return result;
}

}  // namespace jointgrade
