#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jointgrade/tensor.h"

namespace jointgrade {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

struct AdamState {
  std::uint64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  AdamHyper hyper;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update over parallel arrays of parameter values and
/// gradients. The state is resized on first use. Throws NumericError without
/// touching params or state if any gradient is non-finite, and ShapeError if
/// the arrays do not line up with the state.
void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads);

/// Adam bound to a fixed list of parameter tensors.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamHyper hyper);

  void step();
  void zero_grad();

  const AdamState& state() const { return state_; }
  /// Replaces the state (e.g. from a checkpoint). Shapes must match.
  void restore(AdamState state);

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace jointgrade
