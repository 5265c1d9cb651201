#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jointgrade/dataset.h"
#include "jointgrade/losses.h"
#include "jointgrade/trainer.h"

namespace jointgrade {

enum class ExperimentKind { kIntra, kCross, kAblation, kLossStudy };

std::string_view experiment_name(ExperimentKind kind);
/// Accepts "intra", "cross", "ablation", "loss-study" (or "loss_study").
ExperimentKind parse_experiment(std::string_view name);

/// A row of the comparison tables: a wiring plus the losses it trains with.
enum class Method {
  kJointTraining,  // shared encoder, CE
  kEntangledCe,    // two encoders, no detach, CE
  kDetachCe,
  kDetachDaw,
};

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

struct LossStudySettings {
  double ambiguous_fraction = 0.25;
  double focal_focus = 2.0;
  double gce_q = 0.7;
  CurriculumSchedule daw_schedule{1.0, 0.0, 96};
  std::vector<Task> tasks{Task::kA, Task::kB};
};

/// Everything an experiment needs; loaded from the `[data]`, `[model]`,
/// `[train]`, `[experiment]` and `[loss_study]` config sections.
struct ExperimentBundle {
  GeneratorConfig data;
  std::size_t n_train = 2000;
  std::size_t n_test = 1000;
  TrainConfig train;
  CurriculumSchedule schedule_a;
  CurriculumSchedule schedule_b;
  bool differentiate_weight = false;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t folds = 5;
  std::vector<Method> methods{Method::kJointTraining, Method::kDetachCe, Method::kDetachDaw};
  std::size_t threads = 1;
  LossStudySettings loss_study;

  void validate() const;
};

/// Training config for one method row, derived from the bundle's base config.
TrainConfig method_train_config(const ExperimentBundle& bundle, Method method);

/// Generator config for repetition `seed`.
GeneratorConfig repetition_data(const ExperimentBundle& bundle, std::uint64_t seed);
/// Training config with the seed of repetition `seed` folded in.
TrainConfig repetition_train(const TrainConfig& base, std::uint64_t seed);

struct ResultTable {
  struct Row {
    std::string method;
    std::string seed;  // repetition seed, or "median"
    std::string fold;  // fold index for per-fold tables, else empty
    std::vector<double> values;
  };

  std::string name;
  std::vector<std::string> columns;  // metric columns, in order
  std::vector<Row> rows;
};

/// Runs one experiment protocol and returns its tables:
///   intra      -> "intra" (+ "intra_folds")
///   cross      -> "cross"
///   ablation   -> "ablation_intra" (+ "ablation_intra_folds"), "ablation_cross"
///   loss-study -> "loss_study"
/// Cells run on up to bundle.threads threads; output does not depend on it.
std::vector<ResultTable> run_experiment(ExperimentKind kind, const ExperimentBundle& bundle);

double median(std::vector<double> values);

std::string table_csv(const ResultTable& table);
/// Fixed-width rendering for reading in a terminal.
std::string table_text(const ResultTable& table);

}  // namespace jointgrade
