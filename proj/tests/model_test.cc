#include "jointgrade/model.h"

#include <gtest/gtest.h>

#include <functional>

#include <random>
#include <set>

#include "jointgrade/error.h"
#include "jointgrade/losses.h"
#include "test_util.h"

namespace jointgrade {
namespace {

using oracle::max_abs;
using oracle::max_relative_error;
using oracle::numerical_gradient;
using oracle::uniform_labels;

ModelConfig config_with(Wiring wiring) {
  ModelConfig c;
  c.wiring = wiring;
  return c;
}

Tensor random_batch(std::mt19937_64& rng, std::size_t m, std::size_t d) {
  return Tensor::constant({m, d}, oracle::uniform_values(rng, m * d, -2.0, 2.0));
}

std::vector<std::vector<double>> snapshot(const DualStreamModel& model) {
  std::vector<std::vector<double>> out;
  for (const auto& t : model.parameter_tensors()) out.emplace_back(t.values().begin(), t.values().end());
  return out;
}

double max_abs_grad(const std::vector<Tensor>& tensors) {
  double out = 0.0;
  for (const auto& t : tensors) out = std::max(out, max_abs(t.grad()));
  return out;
}

TEST(ModelTest, BuildIsDeterministic) {
  const auto a = DualStreamModel::build(ModelConfig{}, 42);
  const auto b = DualStreamModel::build(ModelConfig{}, 42);
  const auto c = DualStreamModel::build(ModelConfig{}, 43);
  EXPECT_EQ(snapshot(a), snapshot(b));
  EXPECT_NE(snapshot(a), snapshot(c));
}

TEST(ModelTest, ClassifierWidths) {
  auto detached = DualStreamModel::build(config_with(Wiring::kDetached), 1);
  EXPECT_EQ(detached.config().classifier_width(), 16u);
  EXPECT_EQ(detached.classifier_a()->weight.shape(), (Shape{16, 4}));
  EXPECT_EQ(detached.classifier_b()->weight.shape(), (Shape{16, 3}));
  auto entangled = DualStreamModel::build(config_with(Wiring::kEntangled), 1);
  EXPECT_EQ(entangled.classifier_a()->weight.shape(), (Shape{16, 4}));
  auto shared = DualStreamModel::build(config_with(Wiring::kShared), 1);
  EXPECT_EQ(shared.classifier_a()->weight.shape(), (Shape{8, 4}));
  auto single = DualStreamModel::build(config_with(Wiring::kSingleTaskA), 1);
  EXPECT_EQ(single.classifier_a()->weight.shape(), (Shape{8, 4}));
}

TEST(ModelTest, SingleTaskModelsOmitOtherStream) {
  const auto a = DualStreamModel::build(config_with(Wiring::kSingleTaskA), 1);
  EXPECT_TRUE(a.encoder_a().has_value());
  EXPECT_FALSE(a.encoder_b().has_value());
  EXPECT_FALSE(a.classifier_b().has_value());
  for (const auto& p : a.parameters()) {
    EXPECT_EQ(p.name.find("encoder_b"), std::string::npos);
    EXPECT_EQ(p.name.find("classifier_b"), std::string::npos);
  }
  const auto b = DualStreamModel::build(config_with(Wiring::kSingleTaskB), 1);
  EXPECT_FALSE(b.encoder_a().has_value());
  EXPECT_TRUE(b.encoder_b().has_value());
  std::mt19937_64 rng(1);
  const ModelOutput out = b.forward(random_batch(rng, 3, 16));
  EXPECT_FALSE(out.logits_a.has_value());
  ASSERT_TRUE(out.logits_b.has_value());
  EXPECT_EQ(out.logits_b->shape(), (Shape{3, 3}));
}

TEST(ModelTest, ParametersAreDisjointAndNamedUniquely) {
  for (Wiring w : {Wiring::kDetached, Wiring::kEntangled, Wiring::kShared, Wiring::kSingleTaskA}) {
    const auto model = DualStreamModel::build(config_with(w), 3);
    std::set<const Tensor::Node*> nodes;
    std::set<std::string> names;
    std::size_t count = 0;
    for (const auto& p : model.parameters()) {
      EXPECT_TRUE(nodes.insert(p.tensor.node().get()).second) << p.name;
      EXPECT_TRUE(names.insert(p.name).second) << p.name;
      count += p.tensor.size();
    }
    EXPECT_EQ(count, model.parameter_count());
  }
}

TEST(ModelTest, BuildRejectsZeroWidthLayers) {
  ModelConfig c;
  c.hidden_dims = {32, 0};
  EXPECT_THROW(DualStreamModel::build(c, 1), ConfigError);
  c = ModelConfig{};
  c.feature_dim = 0;
  EXPECT_THROW(DualStreamModel::build(c, 1), ConfigError);
}

TEST(ModelTest, ForwardRejectsWrongInputWidth) {
  const auto model = DualStreamModel::build(ModelConfig{}, 1);
  EXPECT_THROW(model.forward(Tensor::zeros({2, 15})), ShapeError);
}

TEST(ModelTest, ForwardIsDeterministic) {
  const auto model = DualStreamModel::build(ModelConfig{}, 5);
  std::mt19937_64 rng(5);
  const Tensor x = random_batch(rng, 7, 16);
  const auto first = model.forward(x);
  const auto second = model.forward(x);
  EXPECT_TRUE(std::equal(first.logits_a->values().begin(), first.logits_a->values().end(),
                         second.logits_a->values().begin()));
  EXPECT_TRUE(std::equal(first.logits_b->values().begin(), first.logits_b->values().end(),
                         second.logits_b->values().begin()));
}

// Task-A loss never reaches encoder B in detached wiring, and vice versa.
TEST(ModelTest, DetachedWiringHasZeroCrossGradient) {
  auto model = DualStreamModel::build(config_with(Wiring::kDetached), 9);
  const auto enc_a = encoder_tensors(*model.encoder_a());
  const auto enc_b = encoder_tensors(*model.encoder_b());
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = random_batch(rng, 8, 16);
    const auto labels_a = uniform_labels(rng, 8, 4);
    const auto labels_b = uniform_labels(rng, 8, 3);

    model.zero_grad();
    loss_value(CrossEntropyLoss{}, *model.forward(x).logits_a, labels_a, 0.0).backward();
    EXPECT_EQ(max_abs_grad(enc_b), 0.0);
    EXPECT_GT(max_abs_grad(enc_a), 0.0);

    model.zero_grad();
    loss_value(DifficultyAwareLoss{}, *model.forward(x).logits_b, labels_b, 0.5).backward();
    EXPECT_EQ(max_abs_grad(enc_a), 0.0);
    EXPECT_GT(max_abs_grad(enc_b), 0.0);
  }
}

TEST(ModelTest, EntangledAndSharedWiringHaveCrossGradient) {
  std::mt19937_64 rng(10);
  for (Wiring w : {Wiring::kEntangled, Wiring::kShared}) {
    auto model = DualStreamModel::build(config_with(w), 10);
    const Tensor x = random_batch(rng, 8, 16);
    model.zero_grad();
    loss_value(CrossEntropyLoss{}, *model.forward(x).logits_a, uniform_labels(rng, 8, 4), 0.0).backward();
    EXPECT_GT(max_abs_grad(encoder_tensors(*model.encoder_b())), 0.0) << wiring_name(w);
    model.zero_grad();
    loss_value(CrossEntropyLoss{}, *model.forward(x).logits_b, uniform_labels(rng, 8, 3), 0.0).backward();
    EXPECT_GT(max_abs_grad(encoder_tensors(*model.encoder_a())), 0.0) << wiring_name(w);
  }
}

TEST(ModelTest, EntangledCrossGradientMatchesFiniteDifferences) {
  auto model = DualStreamModel::build(config_with(Wiring::kEntangled), 11);
  std::mt19937_64 rng(11);
  const Tensor x = random_batch(rng, 6, 16);
  const auto labels = uniform_labels(rng, 6, 4);
  auto f = [&] { return loss_value(CrossEntropyLoss{}, *model.forward(x).logits_a, labels, 0.0).item(); };
  model.zero_grad();
  loss_value(CrossEntropyLoss{}, *model.forward(x).logits_a, labels, 0.0).backward();
  for (Tensor t : encoder_tensors(*model.encoder_b())) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    EXPECT_LT(max_relative_error(analytic, numerical_gradient(f, t)), 1e-5);
  }
}

TEST(ModelTest, DetachedClassifierStillSeesOtherStream) {
  auto model = DualStreamModel::build(config_with(Wiring::kDetached), 12);
  std::mt19937_64 rng(12);
  const Tensor x = random_batch(rng, 5, 16);
  const Tensor logits = *model.forward(x).logits_a;
  const std::vector<double> before(logits.values().begin(), logits.values().end());
  Tensor last_b = model.encoder_b()->layers.back().weight;
  for (double& v : last_b.mutable_values()) v += 0.01;
  const Tensor after = *model.forward(x).logits_a;
  double diff = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) diff = std::max(diff, std::abs(after.values()[i] - before[i]));
  EXPECT_GT(diff, 0.0);
}

TEST(ModelTest, DetachAffectsOnlyGradientsNotForward) {
  auto detached = DualStreamModel::build(config_with(Wiring::kDetached), 13);
  auto entangled = DualStreamModel::build(config_with(Wiring::kEntangled), 13);
  // Same seed and same parameter layout give identical parameters.
  ASSERT_EQ(snapshot(detached), snapshot(entangled));
  std::mt19937_64 rng(13);
  const Tensor x = random_batch(rng, 9, 16);
  const auto a = detached.forward(x);
  const auto b = entangled.forward(x);
  EXPECT_TRUE(std::equal(a.logits_a->values().begin(), a.logits_a->values().end(), b.logits_a->values().begin()));
  EXPECT_TRUE(std::equal(a.logits_b->values().begin(), a.logits_b->values().end(), b.logits_b->values().begin()));
}

TEST(ModelTest, FullDetachedModelGradientsMatchFiniteDifferences) {
  auto model = DualStreamModel::build(config_with(Wiring::kDetached), 14);
  std::mt19937_64 rng(14);
  const Tensor x = random_batch(rng, 4, 16);
  const auto labels_a = uniform_labels(rng, 4, 4);
  const auto labels_b = uniform_labels(rng, 4, 3);
  auto loss_a = [&] { return loss_value(CrossEntropyLoss{}, *model.forward(x).logits_a, labels_a, 0.0).item(); };
  auto loss_b = [&] {
    return loss_value(GeneralizedCrossEntropyLoss{0.7}, *model.forward(x).logits_b, labels_b, 0.0).item();
  };
  model.zero_grad();
  const auto out = model.forward(x);
  add(loss_value(CrossEntropyLoss{}, *out.logits_a, labels_a, 0.0),
      loss_value(GeneralizedCrossEntropyLoss{0.7}, *out.logits_b, labels_b, 0.0))
      .backward();
  // Each encoder receives gradient from its own task only; classifiers from both.
  auto f = [&](const std::string& name) -> std::function<double()> {
    if (name.starts_with("encoder_a")) return loss_a;
    if (name.starts_with("encoder_b")) return loss_b;
    return [&] { return loss_a() + loss_b(); };
  };
  for (auto p : model.parameters()) {
    const std::vector<double> analytic(p.tensor.grad().begin(), p.tensor.grad().end());
    EXPECT_LT(max_relative_error(analytic, numerical_gradient(f(p.name), p.tensor)), 1e-5) << p.name;
  }
}

TEST(ModelTest, WiringNamesRoundTrip) {
  for (Wiring w : {Wiring::kDetached, Wiring::kEntangled, Wiring::kShared, Wiring::kSingleTaskA,
                   Wiring::kSingleTaskB}) {
    EXPECT_EQ(parse_wiring(wiring_name(w)), w);
  }
  EXPECT_THROW(parse_wiring("triple"), ConfigError);
}

}  // namespace
}  // namespace jointgrade
