#pragma once

// Model checkpoints: `<stem>.json` manifest plus `<stem>.bin` holding every
// parameter tensor as raw little-endian float64, in W0, b0, W1, b1, ... order.
// Saving then loading reproduces the parameters bit for bit.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "bsrgan/nn.hpp"

namespace bsrgan {

struct LoadedMlp {
  Mlp mlp;
  nlohmann::json hyperparameters;
};

void save_mlp(const Mlp& mlp, const std::filesystem::path& stem,
              const nlohmann::json& hyperparameters = nlohmann::json::object());
LoadedMlp load_mlp(const std::filesystem::path& stem);

/// Parameter block exactly as written to the .bin file.
std::string parameter_bytes(const Mlp& mlp);

/// Whole-file helpers shared by the artifact writers.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace bsrgan
