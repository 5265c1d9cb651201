#include "jointgrade/losses.h"

#include <algorithm>
#include <cmath>

#include "jointgrade/error.h"

namespace jointgrade {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void CurriculumSchedule::validate() const {
  if (!(gamma_start >= 0.0 && gamma_start <= 1.0) || !(gamma_end >= 0.0 && gamma_end <= 1.0)) {
    throw ConfigError("difficulty-aware range must lie in [0, 1]");
  }
  if (gamma_end > gamma_start) {
    throw ConfigError("gamma_end must not exceed gamma_start");
  }
  if (decay_epochs <= 0) throw ConfigError("decay_epochs must be positive");
}

double gamma_at(const CurriculumSchedule& schedule, int epoch) {
  if (epoch <= 0) return schedule.gamma_start;
  if (epoch >= schedule.decay_epochs) return schedule.gamma_end;
  const double span = schedule.gamma_start - schedule.gamma_end;
  return schedule.gamma_start - span * epoch / schedule.decay_epochs;
}

void validate(const LossKind& kind) {
  std::visit(Overloaded{
                 [](const CrossEntropyLoss&) {},
                 [](const FocalLoss& l) {
                   if (!(l.focus >= 0.0)) throw ConfigError("focal focus must be >= 0");
                 },
                 [](const GeneralizedCrossEntropyLoss& l) {
                   if (!(l.q > 0.0 && l.q <= 1.0)) throw ConfigError("GCE q must lie in (0, 1]");
                 },
                 [](const DifficultyAwareLoss& l) { l.schedule.validate(); },
             },
             kind);
}

std::string loss_name(const LossKind& kind) {
  return std::visit(Overloaded{
                        [](const CrossEntropyLoss&) { return std::string("ce"); },
                        [](const FocalLoss&) { return std::string("focal"); },
                        [](const GeneralizedCrossEntropyLoss&) { return std::string("gce"); },
                        [](const DifficultyAwareLoss&) { return std::string("daw"); },
                    },
                    kind);
}

bool is_difficulty_aware(const LossKind& kind) {
  return std::holds_alternative<DifficultyAwareLoss>(kind);
}

double loss_gamma(const LossKind& kind, int epoch) {
  if (const auto* daw = std::get_if<DifficultyAwareLoss>(&kind)) {
    return gamma_at(daw->schedule, epoch);
  }
  return 0.0;
}

double daw_weight(double p_t, double gamma) {
  return std::pow(std::clamp(p_t, kProbabilityFloor, 1.0), gamma);
}

Tensor loss_value(const LossKind& kind, const Tensor& logits,
                  std::span<const int> labels, double gamma) {
  if (logits.shape().size() != 2 || labels.size() != logits.rows()) {
    throw ShapeError("loss_value", logits.shape(), {labels.size()});
  }
  const Tensor p_t = clamp(gather_true(softmax_rows(logits), labels), kProbabilityFloor, 1.0);

  const Tensor per_sample = std::visit(
      Overloaded{
          [&](const CrossEntropyLoss&) { return scale(log(p_t), -1.0); },
          [&](const FocalLoss& l) {
            const Tensor modulator = pow(affine(p_t, -1.0, 1.0), l.focus);
            return scale(mul(modulator, log(p_t)), -1.0);
          },
          [&](const GeneralizedCrossEntropyLoss& l) {
            return affine(pow(p_t, l.q), -1.0 / l.q, 1.0 / l.q);
          },
          [&](const DifficultyAwareLoss& l) {
            const Tensor weight = l.differentiate_weight ? pow(p_t, gamma) : pow(detach(p_t), gamma);
            return scale(mul(weight, log(p_t)), -1.0);
          },
      },
      kind);
  return mean(per_sample);
}

}  // namespace jointgrade
