#pragma once

#include <filesystem>
#include <string_view>

#include "jointgrade/experiment.h"

namespace jointgrade {

// INI-style configuration (`key = value`, `[section]` headers, `#` or `;`
// comments). Every key is optional; unspecified keys keep the defaults of the
// structs they fill. See configs/default.ini for the full schema.
//
//   [data]        d, classes_a, classes_b, class_priors_a (comma list),
//                 correlation, separation, noise_sigma, ambiguous_fraction,
//                 seed, n_train, n_test
//   [model]       wiring, hidden_dims (comma list), feature_dim
//   [train]       loss, loss_a, loss_b (ce|focal|gce|daw), focal_focus, gce_q,
//                 gamma_start, gamma_end, decay_epochs, gamma_start_b,
//                 gamma_end_b, decay_epochs_b, differentiate_weight, epochs,
//                 batch_size, lr, beta1, beta2, eps, seed, eval_every
//   [experiment]  seeds, folds, methods, threads
//   [loss_study]  ambiguous_fraction, focal_focus, gce_q, gamma_start,
//                 gamma_end, decay_epochs, tasks (a,b)
//
// Unknown sections or keys are rejected with ConfigError.

ExperimentBundle parse_config(std::string_view text);
ExperimentBundle load_config(const std::filesystem::path& path);

}  // namespace jointgrade
