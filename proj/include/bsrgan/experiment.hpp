#pragma once

// End-to-end runs: seen-classifier pretraining, GAN (+ reconstruction)
// training, recognition-stage classifiers and evaluation, plus the ablation
// and sweep drivers built on top of them.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bsrgan/bsr.hpp"
#include "bsrgan/data.hpp"
#include "bsrgan/eval.hpp"
#include "bsrgan/gan.hpp"
#include "bsrgan/vsr.hpp"

namespace bsrgan {

enum class AblationMode {
  base,     // GAN only, softmax over features
  sr,       // one shared regressor in the generator objective, softmax over features
  bsr,      // two regressors in the generator objective, softmax over features
  vsr,      // regressors fitted alongside but outside the generator objective, joined inputs
  bsr_vsr,  // full method
};

std::string to_string(AblationMode mode);
/// Accepts base, sr, bsr, vsr, bsr+vsr. Throws ValidationError otherwise.
AblationMode parse_ablation_mode(std::string_view text);
std::vector<AblationMode> parse_ablation_modes(std::string_view comma_separated);

struct ExperimentConfig {
  TrainConfig train;
  ClassifierConfig seen_classifier;
  ClassifierConfig vsr_classifier{.epochs = 30, .batch_size = 64, .hidden = {64}, .adam = {}, .seed = 0};
  ClassifierConfig softmax_classifier;
  std::size_t n_syn_per_class = 100;
  AblationMode mode = AblationMode::bsr_vsr;
  bool tie_regressors = false;  // copy R_s into R_u after training

  bool operator==(const ExperimentConfig&) const = default;
};

/// Standardized copy of a dataset with the constants that produced it.
struct PreparedData {
  LabeledData data;
  Standardizer standardizer;
  std::string raw_hash;
  nlohmann::json source;  // how `raw` was obtained: {"synthetic": ...} or {"data": ...}

  /// Fits the standardizer on the train split of `raw`.
  static PreparedData from_raw(const LabeledData& raw,
                               nlohmann::json source = nlohmann::json::object());
  nlohmann::json provenance() const;
};

struct ExperimentResult {
  Mlp seen_classifier;
  GanModel gan;
  std::optional<BsrComponent> bsr;
  std::optional<VsrClassifier> zsl_classifier;
  std::optional<VsrClassifier> gzsl_classifier;
  TrainingLog log;
  EvalReport zsl;
  EvalReport gzsl;
  EvalReport summary;  // a from zsl; u, s, h and per-class accuracy from gzsl
  double gamma = 0.0;
  double seconds = 0.0;
};

/// Full train + evaluate for config.mode. With train.epochs == 0 only the
/// networks are initialized and nothing is evaluated.
ExperimentResult run_experiment(const PreparedData& prepared, const ExperimentConfig& config);

/// Manifest embedded in every report: the full run config (data source
/// included), effective gamma and derived seeds. Enough to rerun the report.
nlohmann::json experiment_manifest(const ExperimentConfig& config, const nlohmann::json& source,
                                   double gamma);

struct ResultRow {
  std::string label;
  EvalReport report;
  double seconds = 0.0;
};

/// One run per mode on identical data and seed. `jobs` > 1 runs modes in parallel.
std::vector<ResultRow> run_ablation(const PreparedData& prepared, const ExperimentConfig& config,
                                    const std::vector<AblationMode>& modes, std::size_t jobs = 1);

enum class SweepParam { gamma, n_syn };
std::string to_string(SweepParam param);
SweepParam parse_sweep_param(std::string_view text);
std::vector<double> parse_grid(std::string_view comma_separated);

/// One full run per grid point with the shared base seed.
std::vector<ResultRow> sweep(SweepParam param, const std::vector<double>& grid,
                             const PreparedData& prepared, const ExperimentConfig& config,
                             std::size_t jobs = 1);

/// CSV with header mode_or_param,a,u,s,h,seed.
std::string results_csv(const std::vector<ResultRow>& rows, std::uint64_t seed);
nlohmann::json results_json(const std::vector<ResultRow>& rows);

}  // namespace bsrgan
