#include "jointgrade/experiment.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "jointgrade/error.h"
#include "jointgrade/random.h"

namespace jointgrade {

namespace {

constexpr std::uint64_t kDataStream = 11;
constexpr std::uint64_t kTrainStream = 12;
constexpr std::uint64_t kFoldStream = 13;

const std::vector<std::string> kIntraColumns{"a_auc", "a_f1", "a_acc", "b_auc", "b_f1", "b_acc"};
const std::vector<std::string> kCrossColumns{"a_auc", "a_f1", "a_acc", "a_rec", "a_pre",
                                             "b_auc", "b_f1", "b_acc", "b_rec", "b_pre"};

struct Cell {
  std::string method;
  std::uint64_t seed = 0;
  int fold = -1;
  std::function<std::vector<double>()> run;
};

std::string describe(const Cell& cell) {
  std::string out = "method=" + cell.method + ", seed=" + std::to_string(cell.seed);
  if (cell.fold >= 0) out += ", fold=" + std::to_string(cell.fold);
  return out;
}

// Runs every cell; results are stored by index so the thread count cannot
// change the output. The first failing cell (in index order) is rethrown.
std::vector<std::vector<double>> run_cells(const std::vector<Cell>& cells, std::size_t threads,
                                           std::string_view experiment) {
  std::vector<std::vector<double>> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        results[i] = cells[i].run();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(cells.size(), 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw Error("experiment " + std::string(experiment) + " failed at cell (" + describe(cells[i]) +
                  "): " + e.what());
    }
  }
  return results;
}

void append_task(std::vector<double>& out, const std::optional<TaskMetrics>& m, bool rec_pre) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.push_back(m ? m->macro_auc : nan);
  out.push_back(m ? m->macro_f1 : nan);
  out.push_back(m ? m->accuracy : nan);
  if (rec_pre) {
    out.push_back(m ? m->macro_recall : nan);
    out.push_back(m ? m->macro_precision : nan);
  }
}

std::vector<double> report_values(const MetricsReport& report, bool rec_pre) {
  std::vector<double> out;
  append_task(out, report.task_a, rec_pre);
  append_task(out, report.task_b, rec_pre);
  return out;
}

Dataset intra_dataset(const ExperimentBundle& bundle, std::uint64_t seed) {
  return generate(repetition_data(bundle, seed), bundle.n_train + bundle.n_test, Domain::kBiased);
}

// Appends per-seed rows, then a median row per method.
ResultTable summarize(std::string name, std::vector<std::string> columns, const std::vector<std::string>& methods,
                      const std::vector<std::uint64_t>& seeds,
                      const std::vector<std::vector<double>>& per_seed /* method-major */) {
  ResultTable table{std::move(name), std::move(columns), {}};
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      table.rows.push_back({methods[m], std::to_string(seeds[s]), "", per_seed[m * seeds.size() + s]});
    }
    std::vector<double> med(table.columns.size());
    for (std::size_t c = 0; c < med.size(); ++c) {
      std::vector<double> column;
      for (std::size_t s = 0; s < seeds.size(); ++s) column.push_back(per_seed[m * seeds.size() + s][c]);
      med[c] = median(column);
    }
    table.rows.push_back({methods[m], "median", "", std::move(med)});
  }
  return table;
}

std::vector<ResultTable> run_intra(const ExperimentBundle& bundle, const std::string& name) {
  std::vector<Cell> cells;
  std::vector<std::string> methods;
  for (Method method : bundle.methods) {
    methods.emplace_back(method_name(method));
    for (std::uint64_t seed : bundle.seeds) {
      for (std::size_t f = 0; f < bundle.folds; ++f) {
        cells.push_back({std::string(method_name(method)), seed, static_cast<int>(f), [&bundle, method, seed, f] {
                           const Dataset data = intra_dataset(bundle, seed);
                           const auto folds = kfold_split(data, bundle.folds, mix_seed(seed, kFoldStream));
                           const TrainConfig cfg = repetition_train(method_train_config(bundle, method), seed);
                           const TrainResult run = train(cfg, data.subset(folds[f].train));
                           return report_values(evaluate(run.model, data.subset(folds[f].test)), false);
                         }});
      }
    }
  }
  const auto results = run_cells(cells, bundle.threads, name);

  ResultTable folds_table{name + "_folds", kIntraColumns, {}};
  std::vector<std::vector<double>> per_seed;
  for (std::size_t base = 0; base < cells.size(); base += bundle.folds) {
    std::vector<double> mean(kIntraColumns.size(), 0.0);
    for (std::size_t f = 0; f < bundle.folds; ++f) {
      const Cell& cell = cells[base + f];
      folds_table.rows.push_back({cell.method, std::to_string(cell.seed), std::to_string(f), results[base + f]});
      for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += results[base + f][c];
    }
    for (double& v : mean) v /= static_cast<double>(bundle.folds);
    per_seed.push_back(std::move(mean));
  }
  return {summarize(name, kIntraColumns, methods, bundle.seeds, per_seed), std::move(folds_table)};
}

ResultTable run_cross(const ExperimentBundle& bundle, const std::string& name) {
  std::vector<Cell> cells;
  std::vector<std::string> methods;
  for (Method method : bundle.methods) {
    methods.emplace_back(method_name(method));
    for (std::uint64_t seed : bundle.seeds) {
      cells.push_back({std::string(method_name(method)), seed, -1, [&bundle, method, seed] {
                         const GeneratorConfig data = repetition_data(bundle, seed);
                         const Dataset train_set = generate(data, bundle.n_train, Domain::kBiased);
                         const Dataset test_set = generate(data, bundle.n_test, Domain::kUnbiased);
                         const TrainConfig cfg = repetition_train(method_train_config(bundle, method), seed);
                         const TrainResult run = train(cfg, train_set);
                         return report_values(evaluate(run.model, test_set), true);
                       }});
    }
  }
  return summarize(name, kCrossColumns, methods, bundle.seeds, run_cells(cells, bundle.threads, name));
}

ResultTable run_loss_study(const ExperimentBundle& bundle) {
  const LossStudySettings& ls = bundle.loss_study;
  const std::vector<std::pair<std::string, LossKind>> losses{
      {"CE", CrossEntropyLoss{}},
      {"FL", FocalLoss{ls.focal_focus}},
      {"GCE", GeneralizedCrossEntropyLoss{ls.gce_q}},
      {"DAW", DifficultyAwareLoss{ls.daw_schedule, bundle.differentiate_weight}},
  };
  const bool run_a = std::find(ls.tasks.begin(), ls.tasks.end(), Task::kA) != ls.tasks.end();
  const bool run_b = std::find(ls.tasks.begin(), ls.tasks.end(), Task::kB) != ls.tasks.end();

  std::vector<Cell> cells;
  std::vector<std::string> methods;
  for (const auto& [loss_label, loss] : losses) {
    methods.push_back(loss_label);
    for (std::uint64_t seed : bundle.seeds) {
      cells.push_back({loss_label, seed, -1, [&bundle, &ls, loss = loss, seed, run_a, run_b] {
                         GeneratorConfig data = repetition_data(bundle, seed);
                         data.ambiguous_fraction = ls.ambiguous_fraction;
                         const Dataset all = generate(data, bundle.n_train + bundle.n_test, Domain::kBiased);
                         std::vector<std::size_t> train_idx(bundle.n_train), test_idx(bundle.n_test);
                         std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
                         std::iota(test_idx.begin(), test_idx.end(), bundle.n_train);
                         const Dataset train_set = all.subset(train_idx);
                         const Dataset test_set = all.subset(test_idx);

                         std::vector<double> values;
                         auto single = [&](bool enabled, Wiring wiring, bool task_a) {
                           if (!enabled) {
                             append_task(values, std::nullopt, false);
                             return;
                           }
                           TrainConfig cfg = repetition_train(bundle.train, seed);
                           cfg.wiring = wiring;
                           cfg.loss_a = loss;
                           cfg.loss_b = loss;
                           const MetricsReport r = evaluate(train(cfg, train_set).model, test_set);
                           append_task(values, task_a ? r.task_a : r.task_b, false);
                         };
                         single(run_a, Wiring::kSingleTaskA, true);
                         single(run_b, Wiring::kSingleTaskB, false);
                         return values;
                       }});
    }
  }
  return summarize("loss_study", kIntraColumns, methods, bundle.seeds,
                   run_cells(cells, bundle.threads, "loss_study"));
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string_view experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kIntra: return "intra";
    case ExperimentKind::kCross: return "cross";
    case ExperimentKind::kAblation: return "ablation";
    case ExperimentKind::kLossStudy: return "loss-study";
  }
  return "unknown";
}

ExperimentKind parse_experiment(std::string_view name) {
  if (name == "intra") return ExperimentKind::kIntra;
  if (name == "cross") return ExperimentKind::kCross;
  if (name == "ablation") return ExperimentKind::kAblation;
  if (name == "loss-study" || name == "loss_study") return ExperimentKind::kLossStudy;
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kJointTraining: return "joint_training";
    case Method::kEntangledCe: return "entangled_ce";
    case Method::kDetachCe: return "detach_ce";
    case Method::kDetachDaw: return "detach_daw";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kJointTraining, Method::kEntangledCe, Method::kDetachCe, Method::kDetachDaw}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

void ExperimentBundle::validate() const {
  data.validate();
  train.validate();
  schedule_a.validate();
  schedule_b.validate();
  loss_study.daw_schedule.validate();
  if (n_train == 0 || n_test == 0) throw ConfigError("experiment: n_train and n_test must be positive");
  if (seeds.empty()) throw ConfigError("experiment: empty seed list");
  if (folds < 2) throw ConfigError("experiment: folds must be at least 2");
  if (methods.empty()) throw ConfigError("experiment: empty method list");
  if (loss_study.tasks.empty()) throw ConfigError("loss_study: empty task list");
  if (!(loss_study.ambiguous_fraction >= 0.0 && loss_study.ambiguous_fraction <= 1.0)) {
    throw ConfigError("loss_study: ambiguous_fraction must lie in [0, 1]");
  }
}

TrainConfig method_train_config(const ExperimentBundle& bundle, Method method) {
  TrainConfig cfg = bundle.train;
  switch (method) {
    case Method::kJointTraining:
      cfg.wiring = Wiring::kShared;
      cfg.loss_a = cfg.loss_b = CrossEntropyLoss{};
      break;
    case Method::kEntangledCe:
      cfg.wiring = Wiring::kEntangled;
      cfg.loss_a = cfg.loss_b = CrossEntropyLoss{};
      break;
    case Method::kDetachCe:
      cfg.wiring = Wiring::kDetached;
      cfg.loss_a = cfg.loss_b = CrossEntropyLoss{};
      break;
    case Method::kDetachDaw:
      cfg.wiring = Wiring::kDetached;
      cfg.loss_a = DifficultyAwareLoss{bundle.schedule_a, bundle.differentiate_weight};
      cfg.loss_b = DifficultyAwareLoss{bundle.schedule_b, bundle.differentiate_weight};
      break;
  }
  return cfg;
}

GeneratorConfig repetition_data(const ExperimentBundle& bundle, std::uint64_t seed) {
  GeneratorConfig data = bundle.data;
  data.seed = mix_seed(bundle.data.seed ^ seed, kDataStream);
  return data;
}

TrainConfig repetition_train(const TrainConfig& base, std::uint64_t seed) {
  TrainConfig cfg = base;
  cfg.seed = mix_seed(base.seed ^ seed, kTrainStream);
  return cfg;
}

std::vector<ResultTable> run_experiment(ExperimentKind kind, const ExperimentBundle& bundle) {
  bundle.validate();
  switch (kind) {
    case ExperimentKind::kIntra: return run_intra(bundle, "intra");
    case ExperimentKind::kCross: return {run_cross(bundle, "cross")};
    case ExperimentKind::kAblation: {
      ExperimentBundle ablation = bundle;
      ablation.methods = {Method::kJointTraining, Method::kDetachCe, Method::kDetachDaw};
      auto tables = run_intra(ablation, "ablation_intra");
      tables.push_back(run_cross(ablation, "ablation_cross"));
      return tables;
    }
    case ExperimentKind::kLossStudy: return {run_loss_study(bundle)};
  }
  throw ConfigError("unknown experiment kind");
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::string table_csv(const ResultTable& table) {
  const bool has_fold = std::any_of(table.rows.begin(), table.rows.end(), [](const auto& r) { return !r.fold.empty(); });
  std::string out = "method,seed";
  if (has_fold) out += ",fold";
  for (const auto& c : table.columns) out += "," + c;
  out += '\n';
  for (const auto& row : table.rows) {
    out += row.method + "," + row.seed;
    if (has_fold) out += "," + row.fold;
    for (double v : row.values) out += "," + format_real(v);
    out += '\n';
  }
  return out;
}

std::string table_text(const ResultTable& table) {
  const bool has_fold = std::any_of(table.rows.begin(), table.rows.end(), [](const auto& r) { return !r.fold.empty(); });
  std::size_t method_width = 6;
  for (const auto& row : table.rows) method_width = std::max(method_width, row.method.size());
  std::ostringstream os;
  os << table.name << '\n';
  os << std::left << std::setw(static_cast<int>(method_width) + 2) << "method" << std::setw(8) << "seed";
  if (has_fold) os << std::setw(6) << "fold";
  for (const auto& c : table.columns) os << std::right << std::setw(9) << c;
  os << '\n';
  for (const auto& row : table.rows) {
    os << std::left << std::setw(static_cast<int>(method_width) + 2) << row.method << std::setw(8) << row.seed;
    if (has_fold) os << std::setw(6) << row.fold;
    for (double v : row.values) {
      os << std::right << std::setw(9);
      if (std::isnan(v)) {
        os << "-";
      } else {
        os << std::fixed << std::setprecision(2) << 100.0 * v;
      }
    }
    os << '\n';
  }
  os << "(values in percent; AUC is macro one-vs-rest)\n";
  return os.str();
}

}  // namespace jointgrade
