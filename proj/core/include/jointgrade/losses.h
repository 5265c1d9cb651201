#pragma once

#include <span>
#include <string>
#include <variant>

#include "jointgrade/tensor.h"

namespace jointgrade {

/// Linear easy-to-hard curriculum for the difficulty-aware exponent.
///
/// The exponent starts at gamma_start and decreases by an equal amount every
/// epoch until epoch == decay_epochs, after which it stays at gamma_end.
struct CurriculumSchedule {
  double gamma_start = 1.0;
  double gamma_end = 0.15;
  int decay_epochs = 96;

  /// Throws ConfigError unless 0 <= gamma_end <= gamma_start <= 1 and
  /// decay_epochs > 0.
  void validate() const;

  friend bool operator==(const CurriculumSchedule&, const CurriculumSchedule&) = default;
};

/// Exponent in effect during `epoch` (updated at the start of each epoch).
double gamma_at(const CurriculumSchedule& schedule, int epoch);

struct CrossEntropyLoss {};

struct FocalLoss {
  double focus = 2.0;
};

struct GeneralizedCrossEntropyLoss {
  double q = 0.7;
};

/// -p_t^gamma * log(p_t). By default the weight p_t^gamma is a detached
/// constant; `differentiate_weight` lets gradient flow through it instead.
struct DifficultyAwareLoss {
  CurriculumSchedule schedule;
  bool differentiate_weight = false;
};

using LossKind = std::variant<CrossEntropyLoss, FocalLoss,
                              GeneralizedCrossEntropyLoss, DifficultyAwareLoss>;

/// Lower clamp applied to p_t before any log or power.
inline constexpr double kProbabilityFloor = 1e-12;

void validate(const LossKind& kind);
std::string loss_name(const LossKind& kind);
bool is_difficulty_aware(const LossKind& kind);

/// Exponent used by `kind` at `epoch`; zero for losses without a schedule.
double loss_gamma(const LossKind& kind, int epoch);

/// p_t^gamma, with p_t clamped to [kProbabilityFloor, 1].
double daw_weight(double p_t, double gamma);

/// Mean-reduced loss of `logits` [m x C] against `labels`. `gamma` is used
/// only by DifficultyAwareLoss.
Tensor loss_value(const LossKind& kind, const Tensor& logits,
                  std::span<const int> labels, double gamma);

}  // namespace jointgrade
