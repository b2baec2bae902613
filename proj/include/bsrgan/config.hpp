#pragma once

// JSON run configuration. Every object is strict: unknown keys, wrong types
// and out-of-range values raise ValidationError with clause "config".
//
// {
//   "data": {"features": ..., "attributes": ..., "labels": ..., "splits": ...},
//   "synthetic": {"n_classes": 10, "n_seen": 6, "d_visual": 32, "d_attr": 16,
//                 "samples_per_class": 100, "cluster_std": 0.5, "seed": 0},
//   "seed": 0, "mode": "bsr+vsr", "n_syn_per_class": 100, "gamma": null,
//   "tie_regressors": false, "jobs": 1, "output_dir": null,
//   "gan": {"n_critic", "batch_size", "epochs", "alpha", "beta", "lambda_rs",
//           "lambda_ru", "noise_dim", "condition_critic", "generator_hidden",
//           "critic_hidden", "regressor_hidden", "regressor_real_seen",
//           "adam", "regressor_adam"},
//   "seen_classifier" / "vsr_classifier" / "softmax_classifier":
//           {"epochs", "batch_size", "hidden", "adam"}
// }
//
// Exactly one of "data" and "synthetic" is required; everything else is optional.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>

#include <json.hpp>

#include "bsrgan/data.hpp"
#include "bsrgan/experiment.hpp"

namespace bsrgan {

struct RunConfig {
  std::optional<DataPaths> data;
  std::optional<SyntheticSpec> synthetic;
  ExperimentConfig experiment;
  std::size_t jobs = 1;
  std::optional<std::filesystem::path> output_dir;

  std::uint64_t seed() const noexcept { return experiment.train.seed; }
};

/// Relative data paths are resolved against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j,
                               const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& file);
nlohmann::json to_json(const RunConfig& config);

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticSpec& spec);

/// The "data" or "synthetic" member of a run config, as written to manifests.
nlohmann::json data_source_json(const RunConfig& config);

/// Loads or generates the dataset named by the config.
LabeledData materialize_data(const RunConfig& config);

/// Parses JSON text; syntax errors become ValidationError("config", ...).
nlohmann::json parse_json_text(std::string_view text, std::string_view source);

}  // namespace bsrgan
