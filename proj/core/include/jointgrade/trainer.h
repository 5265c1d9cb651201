#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "jointgrade/adam.h"
#include "jointgrade/dataset.h"
#include "jointgrade/losses.h"
#include "jointgrade/metrics.h"
#include "jointgrade/model.h"

namespace jointgrade {

struct TrainConfig {
  LossKind loss_a = CrossEntropyLoss{};
  LossKind loss_b = CrossEntropyLoss{};
  int epochs = 120;
  std::size_t batch_size = 16;
  AdamHyper adam{};
  std::uint64_t seed = 1;
  Wiring wiring = Wiring::kDetached;
  std::vector<std::size_t> hidden_dims{32};
  std::size_t feature_dim = 8;
  /// Evaluate on the training set every this many epochs (and after the last).
  int eval_every = 120;

  void validate() const;
};

/// Model shape implied by a training config and the dataset it will see.
ModelConfig model_config_for(const TrainConfig& config, const DatasetMeta& meta);

struct TaskMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double macro_auc = 0.0;
  double macro_recall = 0.0;
  double macro_precision = 0.0;
  ConfusionMatrix confusion;
  std::vector<std::size_t> auc_skipped_classes;
  std::size_t n = 0;
};

struct MetricsReport {
  std::optional<TaskMetrics> task_a;
  std::optional<TaskMetrics> task_b;
};

struct EpochRecord {
  int epoch = 0;
  double gamma_a = 0.0;
  double gamma_b = 0.0;
  /// Batch means of each task loss and of their sum, averaged over batches.
  double loss_a = 0.0;
  double loss_b = 0.0;
  double loss_total = 0.0;
  std::optional<MetricsReport> train_metrics;
};

struct RunRecord {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  DualStreamModel model;
  AdamState optimizer;
  RunRecord record;
};

/// Deterministic in (config, train_set). Throws NumericError naming the epoch
/// and batch when a loss becomes non-finite.
TrainResult train(const TrainConfig& config, const Dataset& train_set);

/// Single deterministic pass over `dataset`; one report per task the model has.
MetricsReport evaluate(const DualStreamModel& model, const Dataset& dataset);

/// Softmax probabilities per task, row-major [n x C].
struct Predictions {
  std::vector<double> probs_a;
  std::vector<double> probs_b;
};
Predictions predict(const DualStreamModel& model, const Dataset& dataset);

struct DifficultyHistogram {
  std::size_t bins = 0;
  std::vector<std::uint64_t> counts_a;  // empty when the model lacks task A
  std::vector<std::uint64_t> counts_b;
};

/// Counts of the true-class probability over uniform bins on [0, 1]; p = 1
/// falls in the top bin. Throws ConfigError when bins < 2.
DifficultyHistogram difficulty_histogram(const DualStreamModel& model, const Dataset& dataset,
                                         std::size_t bins);

}  // namespace jointgrade
