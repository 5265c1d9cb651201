#include "jointgrade/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "jointgrade/error.h"
#include "jointgrade/random.h"

namespace jointgrade {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::size_t kEvalChunk = 512;

TaskMetrics task_metrics(std::span<const double> probs, std::span<const int> labels, std::size_t classes) {
  std::vector<int> preds(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = probs.subspan(i * classes, classes);
    preds[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  TaskMetrics out;
  out.n = labels.size();
  out.confusion = confusion_matrix(preds, labels, classes);
  const ClassificationMetrics cm = classification_metrics(out.confusion);
  out.accuracy = cm.accuracy;
  out.macro_f1 = cm.macro_f1;
  out.macro_recall = cm.macro_recall;
  out.macro_precision = cm.macro_precision;
  const AucResult auc = macro_auc_ovr(probs, labels, classes);
  out.macro_auc = auc.macro_auc;
  out.auc_skipped_classes = auc.skipped;
  return out;
}

void check_dataset(const ModelConfig& config, const Dataset& dataset) {
  if (dataset.meta.d != config.input_dim) {
    throw ShapeError("dataset", {dataset.meta.d}, {config.input_dim});
  }
  for (const Sample& s : dataset.samples) {
    if (config.has_task_a() && static_cast<std::size_t>(s.grade_a) >= config.classes_a) {
      throw ShapeError("dataset grade_a", {static_cast<std::size_t>(s.grade_a)}, {config.classes_a});
    }
    if (config.has_task_b() && static_cast<std::size_t>(s.grade_b) >= config.classes_b) {
      throw ShapeError("dataset grade_b", {static_cast<std::size_t>(s.grade_b)}, {config.classes_b});
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  jointgrade::validate(loss_a);
  jointgrade::validate(loss_b);
  adam.validate();
  if (epochs <= 0) throw ConfigError("train: epochs must be positive");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (eval_every <= 0) throw ConfigError("train: eval_every must be positive");
}

ModelConfig model_config_for(const TrainConfig& config, const DatasetMeta& meta) {
  ModelConfig mc;
  mc.input_dim = meta.d;
  mc.hidden_dims = config.hidden_dims;
  mc.feature_dim = config.feature_dim;
  mc.classes_a = std::max<std::size_t>(meta.classes_a, 2);
  mc.classes_b = std::max<std::size_t>(meta.classes_b, 2);
  mc.wiring = config.wiring;
  return mc;
}

TrainResult train(const TrainConfig& config, const Dataset& train_set) {
  config.validate();
  if (train_set.empty()) throw EmptyDatasetError("train: empty training set");
  if (config.batch_size > train_set.size()) {
    throw ConfigError("train: batch_size exceeds dataset size");
  }
  const ModelConfig model_config = model_config_for(config, train_set.meta);
  check_dataset(model_config, train_set);

  TrainResult result{DualStreamModel::build(model_config, mix_seed(config.seed, kInitStream)), {}, {}};
  DualStreamModel& model = result.model;
  Adam optimizer(model.parameter_tensors(), config.adam);
  std::mt19937_64 shuffle_rng(mix_seed(config.seed, kShuffleStream));

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool task_a = model_config.has_task_a();
  const bool task_b = model_config.has_task_b();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.gamma_a = loss_gamma(config.loss_a, epoch);
    rec.gamma_b = loss_gamma(config.loss_b, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batches) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      try {
        const ModelOutput out = model.forward(train_set.features(idx));

        Tensor total;
        double value_a = 0.0, value_b = 0.0;
        if (task_a) {
          const auto labels = train_set.grades(Task::kA, idx);
          const Tensor loss = loss_value(config.loss_a, *out.logits_a, labels, rec.gamma_a);
          value_a = loss.item();
          total = loss;
        }
        if (task_b) {
          const auto labels = train_set.grades(Task::kB, idx);
          const Tensor loss = loss_value(config.loss_b, *out.logits_b, labels, rec.gamma_b);
          value_b = loss.item();
          total = task_a ? add(total, loss) : loss;
        }
        if (!std::isfinite(total.item())) throw NumericError("train: non-finite loss");
        rec.loss_a += value_a;
        rec.loss_b += value_b;
        rec.loss_total += total.item();

        optimizer.zero_grad();
        total.backward();
        optimizer.step();
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches) + ")");
      }
    }
    const double nb = static_cast<double>(batches);
    rec.loss_a /= nb;
    rec.loss_b /= nb;
    rec.loss_total /= nb;
    if ((epoch + 1) % config.eval_every == 0 || epoch + 1 == config.epochs) {
      rec.train_metrics = evaluate(model, train_set);
    }
    result.record.epochs.push_back(std::move(rec));
  }
  result.optimizer = optimizer.state();
  return result;
}

Predictions predict(const DualStreamModel& model, const Dataset& dataset) {
  check_dataset(model.config(), dataset);
  NoGradGuard no_grad;
  Predictions out;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < dataset.size(); start += kEvalChunk) {
    const std::size_t end = std::min(start + kEvalChunk, dataset.size());
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const ModelOutput o = model.forward(dataset.features(idx));
    if (o.logits_a) {
      const Tensor p = softmax_rows(*o.logits_a);
      out.probs_a.insert(out.probs_a.end(), p.values().begin(), p.values().end());
    }
    if (o.logits_b) {
      const Tensor p = softmax_rows(*o.logits_b);
      out.probs_b.insert(out.probs_b.end(), p.values().begin(), p.values().end());
    }
  }
  return out;
}

MetricsReport evaluate(const DualStreamModel& model, const Dataset& dataset) {
  if (dataset.empty()) throw EmptyDatasetError("evaluate: empty dataset");
  const Predictions p = predict(model, dataset);
  const ModelConfig& mc = model.config();
  MetricsReport report;
  if (mc.has_task_a()) report.task_a = task_metrics(p.probs_a, dataset.grades(Task::kA), mc.classes_a);
  if (mc.has_task_b()) report.task_b = task_metrics(p.probs_b, dataset.grades(Task::kB), mc.classes_b);
  return report;
}

DifficultyHistogram difficulty_histogram(const DualStreamModel& model, const Dataset& dataset,
                                         std::size_t bins) {
  if (bins < 2) throw ConfigError("difficulty_histogram: bins must be at least 2");
  const Predictions p = predict(model, dataset);
  const ModelConfig& mc = model.config();
  auto fill = [&](const std::vector<double>& probs, Task task, std::size_t classes) {
    std::vector<std::uint64_t> counts(bins, 0);
    const auto labels = dataset.grades(task);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double p_t = probs[i * classes + static_cast<std::size_t>(labels[i])];
      const auto bin = static_cast<std::size_t>(p_t * static_cast<double>(bins));
      counts[std::min(bin, bins - 1)] += 1;
    }
    return counts;
  };
  DifficultyHistogram h;
  h.bins = bins;
  if (mc.has_task_a()) h.counts_a = fill(p.probs_a, Task::kA, mc.classes_a);
  if (mc.has_task_b()) h.counts_b = fill(p.probs_b, Task::kB, mc.classes_b);
  return h;
}

}  // namespace jointgrade
