#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jointgrade/tensor.h"

namespace jointgrade {

enum class Task { kA, kB };

struct Sample {
  std::vector<double> features;
  int grade_a = 0;
  int grade_b = 0;
  /// Drawn midway between adjacent class means. Not persisted to CSV.
  bool ambiguous = false;
};

struct DatasetMeta {
  std::size_t d = 0;
  std::size_t classes_a = 0;
  std::size_t classes_b = 0;
  std::string provenance;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  /// Throws ConfigError when a sample disagrees with meta.
  void validate() const;

  /// Feature rows for the given sample indices as an [m x d] constant.
  Tensor features(std::span<const std::size_t> indices) const;
  Tensor features() const;
  std::vector<int> grades(Task task, std::span<const std::size_t> indices) const;
  std::vector<int> grades(Task task) const;

  Dataset subset(std::span<const std::size_t> indices) const;
};

enum class Domain {
  /// Task B grade follows the stereotyped map of task A with probability
  /// `correlation`.
  kBiased,
  /// Task B grade is uniform and independent of task A.
  kUnbiased,
};

std::string_view domain_name(Domain domain);
Domain parse_domain(std::string_view name);

struct GeneratorConfig {
  std::size_t d = 16;
  std::size_t classes_a = 4;
  std::size_t classes_b = 3;
  std::vector<double> class_priors_a{0.45, 0.25, 0.20, 0.10};
  double correlation = 0.95;
  double separation = 1.5;
  double noise_sigma = 1.0;
  double ambiguous_fraction = 0.15;
  std::uint64_t seed = 1;

  void validate() const;
};

/// round(grade_a * (classes_b - 1) / (classes_a - 1)).
int stereotyped_map(int grade_a, std::size_t classes_a, std::size_t classes_b);

/// Class-conditional mean for a (grade_a, grade_b) pair. Depends only on the
/// grades, the separation and the seed, so biased and unbiased draws from the
/// same config share geometry.
std::vector<double> class_mean(const GeneratorConfig& config, int grade_a, int grade_b);

/// Deterministic in (config, n, domain). Throws EmptyDatasetError when n == 0.
Dataset generate(const GeneratorConfig& config, std::size_t n, Domain domain);

/// Applies `mapping` to one task's grades. The mapping must cover every grade
/// present, and its image must be {0, ..., K-1}; K becomes the class count.
Dataset remap_grades(const Dataset& dataset, Task task, const std::map<int, int>& mapping);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// k disjoint test folds covering every index; the first n % k folds get one
/// extra element. Throws SplitError when k < 2 or k > n.
std::vector<Fold> kfold_split(const Dataset& dataset, std::size_t k, std::uint64_t seed);

/// Schema: header `id,f0,...,f{d-1},grade_a,grade_b`; d is read from the
/// header. Class counts are inferred as max(grade) + 1 (at least 2).
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(std::string_view text, std::string provenance = "csv");
void write_csv(const Dataset& dataset, const std::filesystem::path& path);
std::string format_csv(const Dataset& dataset);

}  // namespace jointgrade
