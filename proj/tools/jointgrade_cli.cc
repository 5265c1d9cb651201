// jointgrade: command-line front end.
//
//   jointgrade generate   --config <ini> --n <int> --domain biased|unbiased --out <csv>
//   jointgrade train      --config <ini> --data <csv> --out <ckpt> --log <csv>
//   jointgrade eval       --ckpt <ckpt> --data <csv> --out <csv>
//   jointgrade experiment --kind intra|cross|ablation|loss-study --config <ini> --out-dir <dir>
//   jointgrade histogram  --ckpt <ckpt> --data <csv> --bins <int> --out <csv>

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "jointgrade/checkpoint.h"
#include "jointgrade/config.h"
#include "jointgrade/dataset.h"
#include "jointgrade/error.h"
#include "jointgrade/experiment.h"
#include "jointgrade/trainer.h"

namespace fs = std::filesystem;
using namespace jointgrade;

namespace {

std::string real(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string metrics_header() { return "task,n,accuracy,macro_f1,macro_auc,macro_recall,macro_precision,auc_skipped"; }

std::string metrics_row(const std::string& task, const TaskMetrics& m) {
  std::string skipped;
  for (std::size_t c : m.auc_skipped_classes) skipped += (skipped.empty() ? "" : ";") + std::to_string(c);
  return task + "," + std::to_string(m.n) + "," + real(m.accuracy) + "," + real(m.macro_f1) + "," +
         real(m.macro_auc) + "," + real(m.macro_recall) + "," + real(m.macro_precision) + "," + skipped;
}

// CSV files do not record class counts; widen the inferred ones to the config.
void widen_classes(Dataset& data, const ExperimentBundle& bundle) {
  data.meta.classes_a = std::max(data.meta.classes_a, bundle.data.classes_a);
  data.meta.classes_b = std::max(data.meta.classes_b, bundle.data.classes_b);
}

void widen_classes(Dataset& data, const ModelConfig& config) {
  data.meta.classes_a = std::max(data.meta.classes_a, config.classes_a);
  data.meta.classes_b = std::max(data.meta.classes_b, config.classes_b);
}

int cmd_generate(const fs::path& config, std::size_t n, const std::string& domain, const fs::path& out) {
  const ExperimentBundle bundle = load_config(config);
  const Dataset data = generate(bundle.data, n, parse_domain(domain));
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_csv(data, out);
  std::cout << "wrote " << data.size() << " samples (" << data.meta.provenance << ") to " << out << '\n';
  return 0;
}

int cmd_train(const fs::path& config, const fs::path& data_path, const fs::path& out, const fs::path& log) {
  const ExperimentBundle bundle = load_config(config);
  Dataset data = load_csv(data_path);
  widen_classes(data, bundle);
  if (bundle.train.epochs < bundle.schedule_a.decay_epochs &&
      (is_difficulty_aware(bundle.train.loss_a) || is_difficulty_aware(bundle.train.loss_b))) {
    std::cerr << "warning: decay_epochs exceeds epochs; the schedule never reaches gamma_end\n";
  }
  const TrainResult result = train(bundle.train, data);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_checkpoint(out, result.model, &result.optimizer);

  std::string csv = "epoch,gamma_a,gamma_b,loss_a,loss_b,loss_total,train_acc_a,train_auc_a,train_acc_b,train_auc_b\n";
  const bool has_a = result.model.config().has_task_a();
  const bool has_b = result.model.config().has_task_b();
  for (const EpochRecord& e : result.record.epochs) {
    csv += std::to_string(e.epoch) + ",";
    csv += (is_difficulty_aware(bundle.train.loss_a) && has_a ? real(e.gamma_a) : "") + ",";
    csv += (is_difficulty_aware(bundle.train.loss_b) && has_b ? real(e.gamma_b) : "") + ",";
    csv += (has_a ? real(e.loss_a) : "") + "," + (has_b ? real(e.loss_b) : "") + "," + real(e.loss_total);
    const auto& tm = e.train_metrics;
    const bool ma = tm && tm->task_a;
    const bool mb = tm && tm->task_b;
    csv += "," + (ma ? real(tm->task_a->accuracy) : "") + "," + (ma ? real(tm->task_a->macro_auc) : "");
    csv += "," + (mb ? real(tm->task_b->accuracy) : "") + "," + (mb ? real(tm->task_b->macro_auc) : "") + "\n";
  }
  write_text(log, csv);
  const EpochRecord& last = result.record.epochs.back();
  std::cout << "trained " << result.record.epochs.size() << " epochs (" << wiring_name(bundle.train.wiring)
            << "), final loss " << last.loss_total << "; checkpoint " << out << '\n';
  return 0;
}

int cmd_eval(const fs::path& ckpt_path, const fs::path& data_path, const fs::path& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  Dataset data = load_csv(data_path);
  widen_classes(data, ckpt.model.config());
  const MetricsReport report = evaluate(ckpt.model, data);
  std::string csv = metrics_header() + "\n";
  if (report.task_a) csv += metrics_row("a", *report.task_a) + "\n";
  if (report.task_b) csv += metrics_row("b", *report.task_b) + "\n";
  write_text(out, csv);
  std::cout << csv;
  return 0;
}

int cmd_histogram(const fs::path& ckpt_path, const fs::path& data_path, std::size_t bins, const fs::path& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  Dataset data = load_csv(data_path);
  widen_classes(data, ckpt.model.config());
  const DifficultyHistogram h = difficulty_histogram(ckpt.model, data, bins);
  std::string csv = "task,bin,lo,hi,count\n";
  auto emit = [&](const std::string& task, const std::vector<std::uint64_t>& counts) {
    for (std::size_t b = 0; b < counts.size(); ++b) {
      csv += task + "," + std::to_string(b) + "," + real(static_cast<double>(b) / static_cast<double>(bins)) + "," +
             real(static_cast<double>(b + 1) / static_cast<double>(bins)) + "," + std::to_string(counts[b]) + "\n";
    }
  };
  emit("a", h.counts_a);
  emit("b", h.counts_b);
  write_text(out, csv);
  std::cout << csv;
  return 0;
}

int cmd_experiment(const std::string& kind, const fs::path& config, const fs::path& out_dir) {
  const ExperimentBundle bundle = load_config(config);
  const auto tables = run_experiment(parse_experiment(kind), bundle);
  fs::create_directories(out_dir);
  for (const ResultTable& table : tables) {
    write_text(out_dir / (table.name + ".csv"), table_csv(table));
    const std::string text = table_text(table);
    write_text(out_dir / (table.name + ".txt"), text);
    if (table.name.find("_folds") == std::string::npos) std::cout << text << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Difficulty-aware curriculum loss and dual-stream disentangled training lab"};
  app.require_subcommand(1);

  std::string config, domain, data, out, log, ckpt, kind, out_dir;
  std::size_t n = 0, bins = 10;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic two-task dataset");
  gen->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  gen->add_option("--n", n, "Number of samples")->required();
  gen->add_option("--domain", domain, "biased or unbiased")->required()->check(CLI::IsMember({"biased", "unbiased"}));
  gen->add_option("--out", out, "Output CSV")->required();

  auto* tr = app.add_subcommand("train", "Train a model on a CSV dataset");
  tr->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  tr->add_option("--data", data, "Training CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", out, "Checkpoint path")->required();
  tr->add_option("--log", log, "Per-epoch log CSV")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a CSV dataset");
  ev->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", data, "Evaluation CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", out, "Metrics CSV")->required();

  auto* ex = app.add_subcommand("experiment", "Run an experiment protocol and write result tables");
  ex->add_option("--kind", kind, "intra, cross, ablation or loss-study")
      ->required()
      ->check(CLI::IsMember({"intra", "cross", "ablation", "loss-study", "loss_study"}));
  ex->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  ex->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* hist = app.add_subcommand("histogram", "Histogram of true-class probabilities");
  hist->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  hist->add_option("--data", data, "CSV dataset")->required()->check(CLI::ExistingFile);
  hist->add_option("--bins", bins, "Number of bins")->required();
  hist->add_option("--out", out, "Histogram CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(config, n, domain, out);
    if (*tr) return cmd_train(config, data, out, log);
    if (*ev) return cmd_eval(ckpt, data, out);
    if (*ex) return cmd_experiment(kind, config, out_dir);
    if (*hist) return cmd_histogram(ckpt, data, bins, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
