#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace jointgrade {

/// Row = true label, column = prediction.
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::uint64_t> counts;  // row-major classes x classes

  std::uint64_t at(std::size_t label, std::size_t pred) const { return counts[label * classes + pred]; }
  std::uint64_t total() const;
};

/// Throws ContractError on length mismatch, IndexError on an entry outside
/// [0, classes).
ConfusionMatrix confusion_matrix(std::span<const int> preds, std::span<const int> labels,
                                 std::size_t classes);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double macro_recall = 0.0;
  double macro_precision = 0.0;
};

/// Per-class precision, recall and F1 with 0/0 -> 0, averaged without weights
/// over classes that appear as a label or a prediction. Throws ContractError
/// on an empty matrix.
ClassificationMetrics classification_metrics(const ConfusionMatrix& confusion);

struct AucResult {
  double macro_auc = 0.0;
  /// One-vs-rest AUC per class; NaN for skipped classes.
  std::vector<double> per_class;
  /// Classes without both positives and negatives.
  std::vector<std::size_t> skipped;
};

/// Macro one-vs-rest AUC in Mann-Whitney form (ties count one half).
/// `scores` is row-major [m x C]. Throws UndefinedAucError when no class has
/// both positives and negatives.
AucResult macro_auc_ovr(std::span<const double> scores, std::span<const int> labels,
                        std::size_t classes);

/// AUC of `scores` for separating `positive_class` from every other label.
/// NaN when either side is empty.
double binary_auc(std::span<const double> scores, std::span<const int> labels, int positive_class);

}  // namespace jointgrade
