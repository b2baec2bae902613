#pragma once

// On-disk layout of a training run:
//
//   <out>/manifest.json          run config, derived seeds, data hashes, file list
//   <out>/train_log.jsonl        one record per generator step
//   <out>/report.json            summary EvalReport (absent for untrained runs)
//   <out>/checkpoints/<name>.json + .bin
//
// Nothing written depends on wall-clock time, so identical inputs give
// identical bytes.

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "bsrgan/bsr.hpp"
#include "bsrgan/config.hpp"
#include "bsrgan/experiment.hpp"
#include "bsrgan/vsr.hpp"

namespace bsrgan {

void write_run(const std::filesystem::path& out, const RunConfig& config,
               const PreparedData& prepared, const ExperimentResult& result);

/// Everything `eval` needs from a run directory.
struct LoadedRun {
  RunConfig config;
  PreparedData prepared;
  std::optional<BsrComponent> bsr;
  VsrClassifier classifier;
};

/// Throws FormatError when the manifest or the classifier checkpoint for
/// `mode` is missing or unreadable.
LoadedRun load_run(const std::filesystem::path& dir, TaskMode mode);

/// Evaluates a loaded run; the report carries the run's manifest and provenance.
EvalReport evaluate_run(const LoadedRun& run, TaskMode mode);

std::string to_string(TaskMode mode);
TaskMode parse_task_mode(std::string_view text);

/// JSON text as written to artifacts: two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace bsrgan
