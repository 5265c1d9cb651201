#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "jointgrade/adam.h"
#include "jointgrade/model.h"

namespace jointgrade {

// Line-oriented text container, version 1:
//
//   jointgrade-checkpoint 1
//   model input_dim=16 hidden_dims=32 feature_dim=8 classes_a=4 classes_b=3 wiring=detached
//   param <name> <dim>... : <hex-float>...
//   adam <step_count> <lr> <beta1> <beta2> <eps>
//   adam_m <name> <hex-float>...
//   adam_v <name> <hex-float>...
//   end
//
// Reals are written as C99 hex floats so a load reproduces every bit.

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  DualStreamModel model;
  std::optional<AdamState> optimizer;
};

std::string format_checkpoint(const DualStreamModel& model, const AdamState* optimizer = nullptr);
/// Throws ParseError on any malformed or inconsistent content.
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const DualStreamModel& model,
                     const AdamState* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace jointgrade
