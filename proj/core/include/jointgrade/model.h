#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jointgrade/tensor.h"

namespace jointgrade {

/// How the two task streams are connected.
enum class Wiring {
  /// Two encoders; each classifier sees its own features concatenated with
  /// the other stream's features behind a detach.
  kDetached,
  /// Two encoders, same concatenations, no detach.
  kEntangled,
  /// One shared encoder feeding two linear heads ("joint training").
  kShared,
  kSingleTaskA,
  kSingleTaskB,
};

std::string_view wiring_name(Wiring wiring);
/// Throws ConfigError on an unknown name.
Wiring parse_wiring(std::string_view name);

struct ModelConfig {
  std::size_t input_dim = 16;
  std::vector<std::size_t> hidden_dims{32};
  std::size_t feature_dim = 8;
  std::size_t classes_a = 4;
  std::size_t classes_b = 3;
  Wiring wiring = Wiring::kDetached;

  void validate() const;
  bool has_task_a() const { return wiring != Wiring::kSingleTaskB; }
  bool has_task_b() const { return wiring != Wiring::kSingleTaskA; }
  /// Input width of each linear classifier.
  std::size_t classifier_width() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]

  Tensor operator()(const Tensor& x) const;
};

/// MLP with ReLU after every hidden layer and a linear feature layer.
struct Encoder {
  std::vector<Linear> layers;

  Tensor operator()(const Tensor& x) const;
};

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

struct ModelOutput {
  std::optional<Tensor> logits_a;
  std::optional<Tensor> logits_b;
  Tensor features_a;  // own-stream features for task A (or shared features)
  Tensor features_b;
};

class DualStreamModel {
 public:
  /// He-uniform weights, zero biases, drawn from a generator seeded by `seed`.
  static DualStreamModel build(const ModelConfig& config, std::uint64_t seed);

  /// Throws ShapeError when x is not [m x input_dim].
  ModelOutput forward(const Tensor& x) const;

  const ModelConfig& config() const { return config_; }

  /// Every parameter tensor in a fixed order with stable names
  /// ("encoder_a.0.weight", "classifier_b.bias", ...).
  std::vector<NamedParameter> parameters() const;
  std::vector<Tensor> parameter_tensors() const;

  /// Parameters of the encoder whose features feed task A's own stream. In
  /// shared wiring both accessors return the shared encoder.
  const std::optional<Encoder>& encoder_a() const { return encoder_a_; }
  const std::optional<Encoder>& encoder_b() const;
  const std::optional<Linear>& classifier_a() const { return classifier_a_; }
  const std::optional<Linear>& classifier_b() const { return classifier_b_; }

  std::size_t parameter_count() const;
  void zero_grad();

 private:
  explicit DualStreamModel(ModelConfig config) : config_(std::move(config)) {}

  ModelConfig config_;
  std::optional<Encoder> encoder_a_;  // doubles as the shared encoder
  std::optional<Encoder> encoder_b_;
  std::optional<Linear> classifier_a_;
  std::optional<Linear> classifier_b_;
};

std::vector<Tensor> encoder_tensors(const Encoder& encoder);

}  // namespace jointgrade
