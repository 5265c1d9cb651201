#include "jointgrade/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "jointgrade/error.h"

namespace jointgrade {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kSchema{
    {"data",
     {"d", "classes_a", "classes_b", "class_priors_a", "correlation", "separation", "noise_sigma",
      "ambiguous_fraction", "seed", "n_train", "n_test"}},
    {"model", {"wiring", "hidden_dims", "feature_dim"}},
    {"train",
     {"loss", "loss_a", "loss_b", "focal_focus", "gce_q", "gamma_start", "gamma_end", "decay_epochs",
      "gamma_start_b", "gamma_end_b", "decay_epochs_b", "differentiate_weight", "epochs", "batch_size", "lr",
      "beta1", "beta2", "eps", "seed", "eval_every"}},
    {"experiment", {"seeds", "folds", "methods", "threads"}},
    {"loss_study", {"ambiguous_fraction", "focal_focus", "gce_q", "gamma_start", "gamma_end", "decay_epochs", "tasks"}},
};

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }

  std::string text(const std::string& key) const { return trim(tree_->get<std::string>(key)); }

  double real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return parse_real(text(key), key);
  }

  template <typename Int>
  Int integer(const std::string& key, Int fallback) const {
    if (!has(key)) return fallback;
    return parse_int<Int>(text(key), key);
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = text(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(where(key) + ": expected a boolean, got '" + v + "'");
  }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(text(key))) out.push_back(parse_real(item, key));
    return out;
  }

  template <typename Int>
  std::vector<Int> integers(const std::string& key, std::vector<Int> fallback) const {
    if (!has(key)) return fallback;
    std::vector<Int> out;
    for (const auto& item : split_list(text(key))) out.push_back(parse_int<Int>(item, key));
    return out;
  }

  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

 private:
  double parse_real(const std::string& v, const std::string& key) const {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError(where(key) + ": expected a number, got '" + v + "'");
    }
    return out;
  }

  template <typename Int>
  Int parse_int(const std::string& v, const std::string& key) const {
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError(where(key) + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
  }

  const pt::ptree* tree_;
  std::string name_;
};

LossKind parse_loss(const std::string& name, const Section& train, const CurriculumSchedule& schedule,
                    bool differentiate_weight) {
  if (name == "ce") return CrossEntropyLoss{};
  if (name == "focal" || name == "fl") return FocalLoss{train.real("focal_focus", 2.0)};
  if (name == "gce") return GeneralizedCrossEntropyLoss{train.real("gce_q", 0.7)};
  if (name == "daw") return DifficultyAwareLoss{schedule, differentiate_weight};
  throw ConfigError("[train] loss: unknown loss '" + name + "'");
}

}  // namespace

ExperimentBundle parse_config(std::string_view text) {
  pt::ptree root;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  for (const auto& [name, section] : root) {
    const auto schema = kSchema.find(name);
    if (schema == kSchema.end() || section.empty()) {
      throw ConfigError("config: unknown section or top-level key '" + name + "'");
    }
    for (const auto& [key, value] : section) {
      if (!schema->second.count(key)) throw ConfigError("config: unknown key '" + key + "' in [" + name + "]");
    }
  }
  auto section = [&](const std::string& name) {
    const auto it = root.find(name);
    return Section(it == root.not_found() ? nullptr : &it->second, name);
  };

  ExperimentBundle b;
  const Section data = section("data");
  b.data.d = data.integer<std::size_t>("d", b.data.d);
  b.data.classes_a = data.integer<std::size_t>("classes_a", b.data.classes_a);
  b.data.classes_b = data.integer<std::size_t>("classes_b", b.data.classes_b);
  if (data.has("classes_a") && !data.has("class_priors_a")) {
    b.data.class_priors_a.assign(b.data.classes_a, 1.0 / static_cast<double>(b.data.classes_a));
  }
  b.data.class_priors_a = data.reals("class_priors_a", b.data.class_priors_a);
  b.data.correlation = data.real("correlation", b.data.correlation);
  b.data.separation = data.real("separation", b.data.separation);
  b.data.noise_sigma = data.real("noise_sigma", b.data.noise_sigma);
  b.data.ambiguous_fraction = data.real("ambiguous_fraction", b.data.ambiguous_fraction);
  b.data.seed = data.integer<std::uint64_t>("seed", b.data.seed);
  b.n_train = data.integer<std::size_t>("n_train", b.n_train);
  b.n_test = data.integer<std::size_t>("n_test", b.n_test);

  const Section model = section("model");
  if (model.has("wiring")) b.train.wiring = parse_wiring(model.text("wiring"));
  b.train.hidden_dims = model.integers<std::size_t>("hidden_dims", b.train.hidden_dims);
  b.train.feature_dim = model.integer<std::size_t>("feature_dim", b.train.feature_dim);

  const Section train = section("train");
  b.train.epochs = train.integer<int>("epochs", b.train.epochs);
  b.train.batch_size = train.integer<std::size_t>("batch_size", b.train.batch_size);
  b.train.adam.lr = train.real("lr", b.train.adam.lr);
  b.train.adam.beta1 = train.real("beta1", b.train.adam.beta1);
  b.train.adam.beta2 = train.real("beta2", b.train.adam.beta2);
  b.train.adam.eps = train.real("eps", b.train.adam.eps);
  b.train.seed = train.integer<std::uint64_t>("seed", b.train.seed);
  b.train.eval_every = train.integer<int>("eval_every", b.train.epochs);

  b.schedule_a.gamma_start = train.real("gamma_start", b.schedule_a.gamma_start);
  b.schedule_a.gamma_end = train.real("gamma_end", b.schedule_a.gamma_end);
  b.schedule_a.decay_epochs = train.integer<int>("decay_epochs", b.schedule_a.decay_epochs);
  b.schedule_b.gamma_start = train.real("gamma_start_b", b.schedule_a.gamma_start);
  b.schedule_b.gamma_end = train.real("gamma_end_b", b.schedule_a.gamma_end);
  b.schedule_b.decay_epochs = train.integer<int>("decay_epochs_b", b.schedule_a.decay_epochs);
  b.differentiate_weight = train.boolean("differentiate_weight", false);

  const std::string shared_loss = train.has("loss") ? train.text("loss") : "ce";
  b.train.loss_a = parse_loss(train.has("loss_a") ? train.text("loss_a") : shared_loss, train, b.schedule_a,
                              b.differentiate_weight);
  b.train.loss_b = parse_loss(train.has("loss_b") ? train.text("loss_b") : shared_loss, train, b.schedule_b,
                              b.differentiate_weight);

  const Section experiment = section("experiment");
  b.seeds = experiment.integers<std::uint64_t>("seeds", b.seeds);
  b.folds = experiment.integer<std::size_t>("folds", b.folds);
  if (experiment.has("methods")) {
    b.methods.clear();
    for (const auto& m : split_list(experiment.text("methods"))) b.methods.push_back(parse_method(m));
  }
  b.threads = experiment.integer<std::size_t>("threads", b.threads);

  const Section study = section("loss_study");
  b.loss_study.ambiguous_fraction = study.real("ambiguous_fraction", b.loss_study.ambiguous_fraction);
  b.loss_study.focal_focus = study.real("focal_focus", b.loss_study.focal_focus);
  b.loss_study.gce_q = study.real("gce_q", b.loss_study.gce_q);
  b.loss_study.daw_schedule.gamma_start = study.real("gamma_start", b.loss_study.daw_schedule.gamma_start);
  b.loss_study.daw_schedule.gamma_end = study.real("gamma_end", b.loss_study.daw_schedule.gamma_end);
  b.loss_study.daw_schedule.decay_epochs = study.integer<int>("decay_epochs", b.schedule_a.decay_epochs);
  if (study.has("tasks")) {
    b.loss_study.tasks.clear();
    for (const auto& t : split_list(study.text("tasks"))) {
      if (t == "a") b.loss_study.tasks.push_back(Task::kA);
      else if (t == "b") b.loss_study.tasks.push_back(Task::kB);
      else throw ConfigError("[loss_study] tasks: unknown task '" + t + "'");
    }
  }

  b.validate();
  return b;
}

ExperimentBundle load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace jointgrade
