#include "jointgrade/adam.h"

#include <cmath>
#include <string>

#include "jointgrade/error.h"

namespace jointgrade {

void AdamHyper::validate() const {
  if (!(lr > 0.0)) throw ConfigError("adam: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("adam: eps must be positive");
}

void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step", {params.size()}, {grads.size()});
  }
  if (state.first_moment.empty() && state.step_count == 0) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step", {state.first_moment.size()}, {params.size()});
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size() || state.first_moment[k].size() != params[k].size()) {
      throw ShapeError("adam_step", {params[k].size()}, {grads[k].size()});
    }
    for (std::size_t i = 0; i < grads[k].size(); ++i) {
      if (!std::isfinite(grads[k][i])) {
        throw NumericError("adam_step: non-finite gradient in parameter " + std::to_string(k) +
                           " at index " + std::to_string(i));
      }
    }
  }

  const AdamHyper& h = state.hyper;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double g = grads[k][i];
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      params[k][i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

Adam::Adam(std::vector<Tensor> params, AdamHyper hyper) : params_(std::move(params)) {
  hyper.validate();
  for (const auto& p : params_) {
    if (!p.requires_grad() || !p.is_leaf()) {
      throw ContractError("Adam: every tensor must be a parameter leaf");
    }
  }
  state_.hyper = hyper;
  for (const auto& p : params_) {
    state_.first_moment.emplace_back(p.size(), 0.0);
    state_.second_moment.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  std::vector<std::span<double>> values;
  std::vector<std::span<const double>> grads;
  values.reserve(params_.size());
  grads.reserve(params_.size());
  for (auto& p : params_) {
    values.push_back(p.mutable_values());
    grads.push_back(p.grad());
  }
  adam_step(state_, values, grads);
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::restore(AdamState state) {
  if (state.first_moment.size() != params_.size() || state.second_moment.size() != params_.size()) {
    throw ShapeError("Adam::restore", {state.first_moment.size()}, {params_.size()});
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (state.first_moment[k].size() != params_[k].size() ||
        state.second_moment[k].size() != params_[k].size()) {
      throw ShapeError("Adam::restore", {state.first_moment[k].size()}, {params_[k].size()});
    }
  }
  state.hyper.validate();
  state_ = std::move(state);
}

}  // namespace jointgrade
