#include "jointgrade/dataset.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "jointgrade/error.h"
#include "jointgrade/experiment.h"
#include "jointgrade/trainer.h"

namespace jointgrade {
namespace {

// Plug-in mutual information (nats) of the empirical joint grade counts.
double empirical_mutual_information(const Dataset& data) {
  const std::size_t ca = data.meta.classes_a;
  const std::size_t cb = data.meta.classes_b;
  std::vector<double> joint(ca * cb, 0.0), pa(ca, 0.0), pb(cb, 0.0);
  const double n = static_cast<double>(data.size());
  for (const Sample& s : data.samples) {
    joint[static_cast<std::size_t>(s.grade_a) * cb + static_cast<std::size_t>(s.grade_b)] += 1.0 / n;
    pa[static_cast<std::size_t>(s.grade_a)] += 1.0 / n;
    pb[static_cast<std::size_t>(s.grade_b)] += 1.0 / n;
  }
  double mi = 0.0;
  for (std::size_t a = 0; a < ca; ++a) {
    for (std::size_t b = 0; b < cb; ++b) {
      const double p = joint[a * cb + b];
      if (p > 0.0) mi += p * std::log(p / (pa[a] * pb[b]));
    }
  }
  return mi;
}

double stereotype_rate(const Dataset& data) {
  std::size_t hits = 0;
  for (const Sample& s : data.samples) {
    hits += s.grade_b == stereotyped_map(s.grade_a, data.meta.classes_a, data.meta.classes_b);
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

bool same_dataset(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size() || a.meta.d != b.meta.d) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Sample& x = a.samples[i];
    const Sample& y = b.samples[i];
    if (x.features != y.features || x.grade_a != y.grade_a || x.grade_b != y.grade_b) return false;
  }
  return true;
}

TEST(StereotypedMapTest, MonotoneSeverityCoupling) {
  EXPECT_EQ(stereotyped_map(0, 4, 3), 0);
  EXPECT_EQ(stereotyped_map(1, 4, 3), 1);  // 0.667 rounds up
  EXPECT_EQ(stereotyped_map(2, 4, 3), 1);  // 1.333 rounds down
  EXPECT_EQ(stereotyped_map(3, 4, 3), 2);
}

TEST(GenerateTest, FullCorrelationForcesStereotype) {
  GeneratorConfig c;
  c.correlation = 1.0;
  EXPECT_EQ(stereotype_rate(generate(c, 3000, Domain::kBiased)), 1.0);
}

TEST(GenerateTest, IndependentDomainsHaveNegligibleMutualInformation) {
  GeneratorConfig c;
  EXPECT_LT(empirical_mutual_information(generate(c, 10000, Domain::kUnbiased)), 0.02);
  c.correlation = 0.0;
  EXPECT_LT(empirical_mutual_information(generate(c, 10000, Domain::kBiased)), 0.02);
  c.correlation = 0.95;
  EXPECT_GT(empirical_mutual_information(generate(c, 10000, Domain::kBiased)), 0.3);
}

TEST(GenerateTest, IsDeterministic) {
  GeneratorConfig c;
  c.seed = 99;
  EXPECT_TRUE(same_dataset(generate(c, 500, Domain::kBiased), generate(c, 500, Domain::kBiased)));
  EXPECT_FALSE(same_dataset(generate(c, 500, Domain::kBiased), generate(c, 500, Domain::kUnbiased)));
}

TEST(GenerateTest, EmptyRequestThrows) {
  EXPECT_THROW(generate(GeneratorConfig{}, 0, Domain::kBiased), EmptyDatasetError);
}

TEST(GenerateTest, RejectsInvalidConfig) {
  GeneratorConfig c;
  c.class_priors_a = {0.5, 0.5, 0.1, 0.0};
  EXPECT_THROW(generate(c, 10, Domain::kBiased), ConfigError);
  c = GeneratorConfig{};
  c.correlation = 1.2;
  EXPECT_THROW(generate(c, 10, Domain::kBiased), ConfigError);
  c = GeneratorConfig{};
  c.noise_sigma = 0.0;
  EXPECT_THROW(generate(c, 10, Domain::kBiased), ConfigError);
}

// A non-stereotyped draw is uniform over all grades and can land on the
// stereotyped grade by chance, so the expected match rate is c + (1 - c) / C_b.
TEST(GenerateTest, StereotypeRateWithinThreeSigma) {
  for (double corr : {0.5, 0.8, 0.95}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      GeneratorConfig c;
      c.correlation = corr;
      c.seed = seed;
      const std::size_t n = 5000;
      const double expected = corr + (1.0 - corr) / static_cast<double>(c.classes_b);
      const double sigma = std::sqrt(expected * (1.0 - expected) / static_cast<double>(n));
      EXPECT_NEAR(stereotype_rate(generate(c, n, Domain::kBiased)), expected, 3.0 * sigma)
          << "correlation " << corr << " seed " << seed;
    }
  }
}

TEST(GenerateTest, ClassPriorsWithinThreeSigma) {
  GeneratorConfig c;
  const std::size_t n = 8000;
  for (Domain domain : {Domain::kBiased, Domain::kUnbiased}) {
    const Dataset data = generate(c, n, domain);
    std::vector<double> freq(c.classes_a, 0.0);
    for (const Sample& s : data.samples) freq[static_cast<std::size_t>(s.grade_a)] += 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < c.classes_a; ++k) {
      const double p = c.class_priors_a[k];
      EXPECT_NEAR(freq[k], p, 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)));
    }
  }
}

TEST(GenerateTest, AmbiguousFractionAndMidpointMeans) {
  GeneratorConfig c;
  c.ambiguous_fraction = 0.3;
  const std::size_t n = 6000;
  const Dataset data = generate(c, n, Domain::kBiased);
  const auto count = std::count_if(data.samples.begin(), data.samples.end(), [](const Sample& s) { return s.ambiguous; });
  const double sigma = std::sqrt(0.3 * 0.7 / static_cast<double>(n));
  EXPECT_NEAR(static_cast<double>(count) / static_cast<double>(n), 0.3, 3.0 * sigma);

  c.ambiguous_fraction = 0.0;
  const Dataset clean = generate(c, 500, Domain::kBiased);
  for (const Sample& s : clean.samples) EXPECT_FALSE(s.ambiguous);
}

TEST(GenerateTest, ClassMeansScaleWithSeparation) {
  GeneratorConfig c;
  const auto m1 = class_mean(c, 2, 1);
  c.separation *= 2.0;
  const auto m2 = class_mean(c, 2, 1);
  for (std::size_t i = 0; i < m1.size(); ++i) EXPECT_DOUBLE_EQ(m2[i], 2.0 * m1[i]);
}

// A linear softmax probe fit on clean samples errs more on ambiguous ones.
TEST(GenerateTest, AmbiguousSamplesAreHarderForLinearProbe) {
  std::vector<double> gaps;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GeneratorConfig c;
    c.seed = seed;
    const Dataset pool = generate(c, 4000, Domain::kBiased);
    std::vector<std::size_t> clean, held_out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (i >= 2000) {
        held_out.push_back(i);
      } else if (!pool.samples[i].ambiguous) {
        clean.push_back(i);
      }
    }
    TrainConfig probe;
    probe.wiring = Wiring::kSingleTaskA;
    probe.hidden_dims = {};
    probe.epochs = 20;
    probe.eval_every = 20;
    probe.seed = seed;
    const TrainResult fit = train(probe, pool.subset(clean));

    const Dataset test = pool.subset(held_out);
    const Predictions pred = predict(fit.model, test);
    double err[2] = {0, 0}, n[2] = {0, 0};
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto row = std::span(pred.probs_a).subspan(i * 4, 4);
      const auto arg = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      const int k = test.samples[i].ambiguous ? 1 : 0;
      err[k] += arg != test.samples[i].grade_a;
      n[k] += 1;
    }
    gaps.push_back(err[1] / n[1] - err[0] / n[0]);
  }
  EXPECT_GT(median(gaps), 0.0);
}

TEST(RemapGradesTest, MergesTopGrades) {
  Dataset data;
  data.meta = {1, 5, 2, "test"};
  for (int g = 0; g < 5; ++g) data.samples.push_back({{0.0}, g, 0, false});
  const Dataset out = remap_grades(data, Task::kA, {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 3}});
  EXPECT_EQ(out.meta.classes_a, 4u);
  for (const Sample& s : out.samples) EXPECT_LT(s.grade_a, 4);
  EXPECT_EQ(out.samples[4].grade_a, 3);
}

TEST(RemapGradesTest, IdentityLeavesDatasetUnchanged) {
  const Dataset data = generate(GeneratorConfig{}, 200, Domain::kBiased);
  const Dataset out = remap_grades(data, Task::kB, {{0, 0}, {1, 1}, {2, 2}});
  EXPECT_TRUE(same_dataset(data, out));
  EXPECT_EQ(out.meta.classes_b, data.meta.classes_b);
}

TEST(RemapGradesTest, Errors) {
  Dataset data;
  data.meta = {1, 3, 2, "test"};
  for (int g = 0; g < 3; ++g) data.samples.push_back({{0.0}, g, 0, false});
  EXPECT_THROW(remap_grades(data, Task::kA, {{0, 0}, {2, 1}}), MappingError);
  EXPECT_THROW(remap_grades(data, Task::kA, {{0, 0}, {1, 2}, {2, 2}}), MappingError);
}

TEST(KfoldSplitTest, EvenSplit) {
  const Dataset data = generate(GeneratorConfig{}, 10, Domain::kBiased);
  const auto folds = kfold_split(data, 5, 3);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::size_t> seen;
  for (const Fold& f : folds) {
    EXPECT_EQ(f.test.size(), 2u);
    EXPECT_EQ(f.train.size(), 8u);
    for (std::size_t i : f.test) EXPECT_TRUE(seen.insert(i).second);
    std::set<std::size_t> both(f.train.begin(), f.train.end());
    for (std::size_t i : f.test) EXPECT_TRUE(both.insert(i).second);
    EXPECT_EQ(both.size(), 10u);
  }
  EXPECT_EQ(seen.size(), 10u);
}

TEST(KfoldSplitTest, RemainderGoesToLeadingFolds) {
  const Dataset data = generate(GeneratorConfig{}, 11, Domain::kBiased);
  const auto folds = kfold_split(data, 5, 3);
  std::vector<std::size_t> sizes;
  for (const Fold& f : folds) sizes.push_back(f.test.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2, 2, 2}));
}

TEST(KfoldSplitTest, SeededAndValidated) {
  const Dataset data = generate(GeneratorConfig{}, 50, Domain::kBiased);
  const auto a = kfold_split(data, 4, 8);
  const auto b = kfold_split(data, 4, 8);
  const auto c = kfold_split(data, 4, 9);
  for (std::size_t f = 0; f < 4; ++f) EXPECT_EQ(a[f].test, b[f].test);
  bool differs = false;
  for (std::size_t f = 0; f < 4; ++f) differs |= a[f].test != c[f].test;
  EXPECT_TRUE(differs);
  EXPECT_THROW(kfold_split(data, 51, 1), SplitError);
  EXPECT_THROW(kfold_split(data, 1, 1), SplitError);
}

TEST(CsvTest, RoundTripIsExact) {
  GeneratorConfig c;
  c.d = 5;
  const Dataset data = generate(c, 300, Domain::kBiased);
  const Dataset back = parse_csv(format_csv(data));
  EXPECT_TRUE(same_dataset(data, back));
  EXPECT_EQ(back.meta.d, 5u);
  EXPECT_EQ(back.meta.classes_a, 4u);
  EXPECT_EQ(back.meta.classes_b, 3u);
}

TEST(CsvTest, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "jointgrade_csv_roundtrip.csv";
  const Dataset data = generate(GeneratorConfig{}, 50, Domain::kUnbiased);
  write_csv(data, path);
  EXPECT_TRUE(same_dataset(data, load_csv(path)));
  std::filesystem::remove(path);
  EXPECT_THROW(load_csv(path), ParseError);
}

TEST(CsvTest, AcceptsScientificAndPlainNotation) {
  const Dataset d = parse_csv("id,f0,f1,grade_a,grade_b\n0,1.5e-3,-2,0,1\n1, 3.0 ,4E2,1,0\n");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.samples[0].features[0], 1.5e-3);
  EXPECT_EQ(d.samples[1].features[1], 400.0);
  EXPECT_EQ(d.meta.classes_a, 2u);
}

TEST(CsvTest, MissingGradeColumnIsParseError) {
  EXPECT_THROW(parse_csv("id,f0,grade_b\n0,1.0,0\n"), ParseError);
}

TEST(CsvTest, NegativeGradeNamesRowAndColumn) {
  try {
    parse_csv("id,f0,grade_a,grade_b\n0,1.0,0,0\n1,2.0,-1,0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);  // line number; the header is line 1
    EXPECT_EQ(e.column(), "grade_a");
  }
}

TEST(CsvTest, NonNumericCellNamesRowAndColumn) {
  try {
    parse_csv("id,f0,f1,grade_a,grade_b\n0,1.0,abc,0,0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.column(), "f1");
  }
}

TEST(CsvTest, RaggedRowIsParseError) {
  EXPECT_THROW(parse_csv("id,f0,grade_a,grade_b\n0,1.0,0\n"), ParseError);
}

}  // namespace
}  // namespace jointgrade
