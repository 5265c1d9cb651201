#include "jointgrade/model.h"

#include <cmath>
#include <random>

#include "jointgrade/error.h"

namespace jointgrade {

namespace {

Linear make_linear(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> weight(in * out);
  for (double& w : weight) w = dist(rng);
  return Linear{Tensor::parameter({in, out}, std::move(weight)),
                Tensor::parameter({out}, std::vector<double>(out, 0.0))};
}

Encoder make_encoder(const ModelConfig& config, std::mt19937_64& rng) {
  Encoder encoder;
  std::size_t width = config.input_dim;
  for (std::size_t hidden : config.hidden_dims) {
    encoder.layers.push_back(make_linear(width, hidden, rng));
    width = hidden;
  }
  encoder.layers.push_back(make_linear(width, config.feature_dim, rng));
  return encoder;
}

void append_encoder(std::vector<NamedParameter>& out, const std::string& prefix,
                    const Encoder& encoder) {
  for (std::size_t i = 0; i < encoder.layers.size(); ++i) {
    const std::string layer = prefix + "." + std::to_string(i);
    out.push_back({layer + ".weight", encoder.layers[i].weight});
    out.push_back({layer + ".bias", encoder.layers[i].bias});
  }
}

}  // namespace

std::string_view wiring_name(Wiring wiring) {
  switch (wiring) {
    case Wiring::kDetached: return "detached";
    case Wiring::kEntangled: return "entangled";
    case Wiring::kShared: return "shared";
    case Wiring::kSingleTaskA: return "single_task_a";
    case Wiring::kSingleTaskB: return "single_task_b";
  }
  return "unknown";
}

Wiring parse_wiring(std::string_view name) {
  for (Wiring w : {Wiring::kDetached, Wiring::kEntangled, Wiring::kShared,
                   Wiring::kSingleTaskA, Wiring::kSingleTaskB}) {
    if (wiring_name(w) == name) return w;
  }
  throw ConfigError("unknown wiring '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (input_dim == 0 || feature_dim == 0) throw ConfigError("zero-width layer in model config");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ConfigError("zero-width hidden layer in model config");
  }
  if (classes_a < 2 || classes_b < 2) throw ConfigError("each task needs at least two classes");
}

std::size_t ModelConfig::classifier_width() const {
  switch (wiring) {
    case Wiring::kDetached:
    case Wiring::kEntangled: return 2 * feature_dim;
    default: return feature_dim;
  }
}

Tensor Linear::operator()(const Tensor& x) const { return add_bias(matmul(x, weight), bias); }

Tensor Encoder::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size()) h = relu(h);
  }
  return h;
}

DualStreamModel DualStreamModel::build(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  DualStreamModel model(config);
  std::mt19937_64 rng(seed);
  const bool dual = config.wiring == Wiring::kDetached || config.wiring == Wiring::kEntangled;

  if (config.wiring != Wiring::kSingleTaskB) model.encoder_a_ = make_encoder(config, rng);
  if (dual || config.wiring == Wiring::kSingleTaskB) model.encoder_b_ = make_encoder(config, rng);

  const std::size_t width = config.classifier_width();
  if (config.has_task_a()) model.classifier_a_ = make_linear(width, config.classes_a, rng);
  if (config.has_task_b()) model.classifier_b_ = make_linear(width, config.classes_b, rng);
  return model;
}

const std::optional<Encoder>& DualStreamModel::encoder_b() const {
  return config_.wiring == Wiring::kShared ? encoder_a_ : encoder_b_;
}

ModelOutput DualStreamModel::forward(const Tensor& x) const {
  if (x.shape().size() != 2 || x.cols() != config_.input_dim) {
    throw ShapeError("forward", x.shape(), {config_.input_dim});
  }
  ModelOutput out;
  switch (config_.wiring) {
    case Wiring::kDetached: {
      out.features_a = (*encoder_a_)(x);
      out.features_b = (*encoder_b_)(x);
      out.logits_a = (*classifier_a_)(concat_cols(out.features_a, detach(out.features_b)));
      out.logits_b = (*classifier_b_)(concat_cols(detach(out.features_a), out.features_b));
      break;
    }
    case Wiring::kEntangled: {
      out.features_a = (*encoder_a_)(x);
      out.features_b = (*encoder_b_)(x);
      out.logits_a = (*classifier_a_)(concat_cols(out.features_a, out.features_b));
      out.logits_b = (*classifier_b_)(concat_cols(out.features_a, out.features_b));
      break;
    }
    case Wiring::kShared: {
      out.features_a = (*encoder_a_)(x);
      out.features_b = out.features_a;
      out.logits_a = (*classifier_a_)(out.features_a);
      out.logits_b = (*classifier_b_)(out.features_a);
      break;
    }
    case Wiring::kSingleTaskA: {
      out.features_a = (*encoder_a_)(x);
      out.logits_a = (*classifier_a_)(out.features_a);
      break;
    }
    case Wiring::kSingleTaskB: {
      out.features_b = (*encoder_b_)(x);
      out.logits_b = (*classifier_b_)(out.features_b);
      break;
    }
  }
  return out;
}

std::vector<NamedParameter> DualStreamModel::parameters() const {
  std::vector<NamedParameter> out;
  if (encoder_a_) {
    append_encoder(out, config_.wiring == Wiring::kShared ? "encoder_shared" : "encoder_a", *encoder_a_);
  }
  if (encoder_b_) append_encoder(out, "encoder_b", *encoder_b_);
  if (classifier_a_) {
    out.push_back({"classifier_a.weight", classifier_a_->weight});
    out.push_back({"classifier_a.bias", classifier_a_->bias});
  }
  if (classifier_b_) {
    out.push_back({"classifier_b.weight", classifier_b_->weight});
    out.push_back({"classifier_b.bias", classifier_b_->bias});
  }
  return out;
}

std::vector<Tensor> DualStreamModel::parameter_tensors() const {
  std::vector<Tensor> out;
  for (auto& p : parameters()) out.push_back(p.tensor);
  return out;
}

std::size_t DualStreamModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor.size();
  return n;
}

void DualStreamModel::zero_grad() {
  for (auto& p : parameters()) p.tensor.zero_grad();
}

std::vector<Tensor> encoder_tensors(const Encoder& encoder) {
  std::vector<Tensor> out;
  for (const auto& layer : encoder.layers) {
    out.push_back(layer.weight);
    out.push_back(layer.bias);
  }
  return out;
}

}  // namespace jointgrade
