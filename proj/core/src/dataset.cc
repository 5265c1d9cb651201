#include "jointgrade/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "jointgrade/error.h"
#include "jointgrade/random.h"

namespace jointgrade {

namespace {

constexpr std::uint64_t kGeometryStream = 0x6a09e667f3bcc908ULL;
constexpr std::uint64_t kSampleStream = 0xbb67ae8584caa73bULL;

// Unit-norm directions, one per grade of each task. Gram-Schmidt while the
// dimension allows, plain normalization afterwards.
struct Geometry {
  std::vector<std::vector<double>> task_a;
  std::vector<std::vector<double>> task_b;
};

Geometry make_geometry(const GeneratorConfig& config) {
  std::mt19937_64 rng(mix_seed(config.seed, kGeometryStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> basis;
  const std::size_t total = config.classes_a + config.classes_b;
  for (std::size_t k = 0; k < total; ++k) {
    std::vector<double> v(config.d);
    for (double& x : v) x = normal(rng);
    if (basis.size() < config.d) {
      for (const auto& b : basis) {
        const double dot = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * b[i];
      }
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  Geometry g;
  g.task_a.assign(basis.begin(), basis.begin() + static_cast<std::ptrdiff_t>(config.classes_a));
  g.task_b.assign(basis.begin() + static_cast<std::ptrdiff_t>(config.classes_a), basis.end());
  return g;
}

std::vector<double> mean_from(const Geometry& g, double separation, int grade_a, int grade_b) {
  std::vector<double> mean(g.task_a[0].size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    mean[i] = separation * (g.task_a[grade_a][i] + g.task_b[grade_b][i]);
  }
  return mean;
}

int adjacent_grade(int grade, std::size_t classes, double u) {
  if (grade == 0) return 1;
  if (grade == static_cast<int>(classes) - 1) return grade - 1;
  return u < 0.5 ? grade - 1 : grade + 1;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_real(std::string_view cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError("non-numeric cell '" + std::string(cell) + "'", row, column);
  }
  if (!std::isfinite(value)) throw ParseError("non-finite value", row, column);
  return value;
}

int parse_grade(std::string_view cell, std::size_t row, const std::string& column) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError("grade is not an integer: '" + std::string(cell) + "'", row, column);
  }
  if (value < 0 || value > 1'000'000) throw ParseError("grade out of range: " + std::to_string(value), row, column);
  return static_cast<int>(value);
}

}  // namespace

void Dataset::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.features.size() != meta.d) {
      throw ConfigError("sample " + std::to_string(i) + " has " + std::to_string(s.features.size()) +
                        " features, expected " + std::to_string(meta.d));
    }
    if (s.grade_a < 0 || static_cast<std::size_t>(s.grade_a) >= meta.classes_a ||
        s.grade_b < 0 || static_cast<std::size_t>(s.grade_b) >= meta.classes_b) {
      throw ConfigError("sample " + std::to_string(i) + " has a grade outside the class range");
    }
    for (double f : s.features) {
      if (!std::isfinite(f)) throw ConfigError("sample " + std::to_string(i) + " has a non-finite feature");
    }
  }
}

Tensor Dataset::features(std::span<const std::size_t> indices) const {
  std::vector<double> values;
  values.reserve(indices.size() * meta.d);
  for (std::size_t idx : indices) {
    const auto& f = samples.at(idx).features;
    values.insert(values.end(), f.begin(), f.end());
  }
  return Tensor::constant({indices.size(), meta.d}, std::move(values));
}

Tensor Dataset::features() const {
  std::vector<std::size_t> all(size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return features(all);
}

std::vector<int> Dataset::grades(Task task, std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) {
    const Sample& s = samples.at(idx);
    out.push_back(task == Task::kA ? s.grade_a : s.grade_b);
  }
  return out;
}

std::vector<int> Dataset::grades(Task task) const {
  std::vector<int> out;
  out.reserve(size());
  for (const Sample& s : samples) out.push_back(task == Task::kA ? s.grade_a : s.grade_b);
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.meta = meta;
  out.samples.reserve(indices.size());
  for (std::size_t idx : indices) out.samples.push_back(samples.at(idx));
  return out;
}

std::string_view domain_name(Domain domain) {
  return domain == Domain::kBiased ? "biased" : "unbiased";
}

Domain parse_domain(std::string_view name) {
  if (name == "biased") return Domain::kBiased;
  if (name == "unbiased") return Domain::kUnbiased;
  throw ConfigError("unknown domain '" + std::string(name) + "'");
}

void GeneratorConfig::validate() const {
  if (d == 0) throw ConfigError("generator: d must be positive");
  if (classes_a < 2 || classes_b < 2) throw ConfigError("generator: each task needs at least two classes");
  if (class_priors_a.size() != classes_a) {
    throw ConfigError("generator: class_priors_a needs " + std::to_string(classes_a) + " entries");
  }
  double total = 0.0;
  for (double p : class_priors_a) {
    if (!(p >= 0.0)) throw ConfigError("generator: negative class prior");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("generator: class priors must sum to 1");
  if (!(correlation >= 0.0 && correlation <= 1.0)) throw ConfigError("generator: correlation must lie in [0, 1]");
  if (!(separation > 0.0)) throw ConfigError("generator: separation must be positive");
  if (!(noise_sigma > 0.0)) throw ConfigError("generator: noise_sigma must be positive");
  if (!(ambiguous_fraction >= 0.0 && ambiguous_fraction <= 1.0)) {
    throw ConfigError("generator: ambiguous_fraction must lie in [0, 1]");
  }
}

int stereotyped_map(int grade_a, std::size_t classes_a, std::size_t classes_b) {
  const double scaled = static_cast<double>(grade_a) * static_cast<double>(classes_b - 1) /
                        static_cast<double>(classes_a - 1);
  return static_cast<int>(std::lround(scaled));
}

std::vector<double> class_mean(const GeneratorConfig& config, int grade_a, int grade_b) {
  return mean_from(make_geometry(config), config.separation, grade_a, grade_b);
}

Dataset generate(const GeneratorConfig& config, std::size_t n, Domain domain) {
  config.validate();
  if (n == 0) throw EmptyDatasetError("generate: n must be positive");

  const Geometry geometry = make_geometry(config);
  std::mt19937_64 rng(mix_seed(mix_seed(config.seed, kSampleStream), static_cast<std::uint64_t>(domain)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, config.noise_sigma);

  Dataset out;
  out.meta = {config.d, config.classes_a, config.classes_b,
              "synthetic:" + std::string(domain_name(domain)) + ":seed=" + std::to_string(config.seed)};
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Fixed number of uniform draws per sample keeps streams aligned.
    const double u_prior = unit(rng);
    const double u_link = unit(rng);
    const double u_free = unit(rng);
    const double u_ambiguous = unit(rng);
    const double u_side_a = unit(rng);
    const double u_side_b = unit(rng);

    Sample s;
    s.grade_a = static_cast<int>(config.classes_a) - 1;
    double cdf = 0.0;
    for (std::size_t c = 0; c < config.classes_a; ++c) {
      cdf += config.class_priors_a[c];
      if (u_prior < cdf) {
        s.grade_a = static_cast<int>(c);
        break;
      }
    }
    const int uniform_b = std::min(static_cast<int>(u_free * static_cast<double>(config.classes_b)),
                                   static_cast<int>(config.classes_b) - 1);
    if (domain == Domain::kBiased && u_link < config.correlation) {
      s.grade_b = stereotyped_map(s.grade_a, config.classes_a, config.classes_b);
    } else {
      s.grade_b = uniform_b;
    }

    std::vector<double> mean = mean_from(geometry, config.separation, s.grade_a, s.grade_b);
    s.ambiguous = u_ambiguous < config.ambiguous_fraction;
    if (s.ambiguous) {
      const auto neighbour = mean_from(geometry, config.separation,
                                       adjacent_grade(s.grade_a, config.classes_a, u_side_a),
                                       adjacent_grade(s.grade_b, config.classes_b, u_side_b));
      for (std::size_t j = 0; j < mean.size(); ++j) mean[j] = 0.5 * (mean[j] + neighbour[j]);
    }
    s.features.resize(config.d);
    for (std::size_t j = 0; j < config.d; ++j) s.features[j] = mean[j] + noise(rng);
    out.samples.push_back(std::move(s));
  }
  return out;
}

Dataset remap_grades(const Dataset& dataset, Task task, const std::map<int, int>& mapping) {
  std::set<int> image;
  for (const auto& [from, to] : mapping) {
    if (to < 0) throw MappingError("remap_grades: negative target grade " + std::to_string(to));
    image.insert(to);
  }
  if (image.empty()) throw MappingError("remap_grades: empty mapping");
  if (*image.rbegin() != static_cast<int>(image.size()) - 1) {
    throw MappingError("remap_grades: image of the mapping is not contiguous from 0");
  }

  Dataset out = dataset;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    int& grade = task == Task::kA ? out.samples[i].grade_a : out.samples[i].grade_b;
    const auto it = mapping.find(grade);
    if (it == mapping.end()) {
      throw MappingError("remap_grades: grade " + std::to_string(grade) + " (sample " + std::to_string(i) +
                         ") is not mapped");
    }
    grade = it->second;
  }
  (task == Task::kA ? out.meta.classes_a : out.meta.classes_b) = image.size();
  return out;
}

std::vector<Fold> kfold_split(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (k < 2) throw SplitError("kfold_split: k must be at least 2");
  if (k > n) throw SplitError("kfold_split: k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Fold> folds(k);
  std::size_t cursor = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].test.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                         order.begin() + static_cast<std::ptrdiff_t>(cursor + size));
    std::sort(folds[f].test.begin(), folds[f].test.end());
    cursor += size;
  }
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) folds[f].train.insert(folds[f].train.end(), folds[g].test.begin(), folds[g].test.end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

Dataset parse_csv(std::string_view text, std::string provenance) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("empty CSV: missing header", 1);

  const auto header = split_commas(lines[0]);
  std::ptrdiff_t col_a = -1, col_b = -1;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "grade_a") col_a = static_cast<std::ptrdiff_t>(c);
    else if (header[c] == "grade_b") col_b = static_cast<std::ptrdiff_t>(c);
    else if (header[c].size() > 1 && header[c][0] == 'f') feature_cols.push_back(c);
  }
  if (col_a < 0) throw ParseError("header is missing column", 1, "grade_a");
  if (col_b < 0) throw ParseError("header is missing column", 1, "grade_b");
  // Features must be exactly f0..f{d-1}.
  for (std::size_t j = 0; j < feature_cols.size(); ++j) {
    if (header[feature_cols[j]] != "f" + std::to_string(j)) {
      throw ParseError("feature columns must be f0..f{d-1} in order", 1, std::string(header[feature_cols[j]]));
    }
  }
  if (feature_cols.empty()) throw ParseError("header is missing column", 1, "f0");

  Dataset out;
  out.meta.d = feature_cols.size();
  out.meta.provenance = std::move(provenance);
  int max_a = 1, max_b = 1;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::size_t row = r + 1;
    if (trim(lines[r]).empty()) continue;
    const auto cells = split_commas(lines[r]);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()), row);
    }
    Sample s;
    s.features.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) s.features.push_back(parse_real(cells[c], row, std::string(header[c])));
    s.grade_a = parse_grade(cells[static_cast<std::size_t>(col_a)], row, "grade_a");
    s.grade_b = parse_grade(cells[static_cast<std::size_t>(col_b)], row, "grade_b");
    max_a = std::max(max_a, s.grade_a);
    max_b = std::max(max_b, s.grade_b);
    out.samples.push_back(std::move(s));
  }
  out.meta.classes_a = static_cast<std::size_t>(max_a) + 1;
  out.meta.classes_b = static_cast<std::size_t>(max_b) + 1;
  return out;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), path.string());
}

std::string format_csv(const Dataset& dataset) {
  std::string out = "id";
  for (std::size_t j = 0; j < dataset.meta.d; ++j) out += ",f" + std::to_string(j);
  out += ",grade_a,grade_b\n";
  char buf[64];
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const Sample& s = dataset.samples[i];
    out += std::to_string(i);
    for (double f : s.features) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), f);
      out += ',';
      out.append(buf, ptr);
    }
    out += ',' + std::to_string(s.grade_a) + ',' + std::to_string(s.grade_b) + '\n';
  }
  return out;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << format_csv(dataset);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace jointgrade
