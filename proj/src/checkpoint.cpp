#include "bsrgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bsrgan/errors.hpp"

namespace bsrgan {

namespace {

constexpr const char* kFormat = "bsrgan-mlp";
constexpr int kFormatVersion = 1;

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

void append_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xffU));
    bits >>= 8;
  }
}

double read_le(const std::string& in, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) {
    bits = (bits << 8) | static_cast<unsigned char>(in[offset + static_cast<std::size_t>(i)]);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

std::string parameter_bytes(const Mlp& mlp) {
  std::string out;
  for (const Matrix& p : mlp.parameters()) {
    for (double v : p.data()) append_le(out, v);
  }
  return out;
}

void save_mlp(const Mlp& mlp, const std::filesystem::path& stem,
              const nlohmann::json& hyperparameters) {
  nlohmann::json blocks = nlohmann::json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < mlp.parameters().size(); ++i) {
    const Matrix& p = mlp.parameters()[i];
    blocks.push_back({{"name", (i % 2 == 0 ? "W" : "b") + std::to_string(i / 2)},
                      {"rows", p.rows()},
                      {"cols", p.cols()},
                      {"offset", offset}});
    offset += p.size() * sizeof(double);
  }
  nlohmann::json manifest = {
      {"format", kFormat},
      {"version", kFormatVersion},
      {"layer_dims", mlp.layer_dims()},
      {"seed", mlp.seed()},
      {"init_std", mlp.init_std()},
      {"hyperparameters", hyperparameters},
      {"blocks", blocks},
      {"data_file", with_suffix(stem, ".bin").filename().string()},
      {"data_bytes", offset},
  };
  write_file(with_suffix(stem, ".json"), manifest.dump(2) + "\n");
  write_file(with_suffix(stem, ".bin"), parameter_bytes(mlp));
}

LoadedMlp load_mlp(const std::filesystem::path& stem) {
  const auto manifest_path = with_suffix(stem, ".json");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != kFormat || manifest.value("version", 0) != kFormatVersion) {
    throw FormatError(manifest_path.string() + ": not a version 1 bsrgan-mlp checkpoint");
  }
  const std::string data = read_file(with_suffix(stem, ".bin"));
  try {
    const auto dims = manifest.at("layer_dims").get<std::vector<std::size_t>>();
    std::vector<Matrix> params;
    for (const auto& block : manifest.at("blocks")) {
      const auto rows = block.at("rows").get<std::size_t>();
      const auto cols = block.at("cols").get<std::size_t>();
      const auto offset = block.at("offset").get<std::size_t>();
      if (offset + rows * cols * sizeof(double) > data.size()) {
        throw FormatError(stem.string() + ".bin: block " + block.at("name").get<std::string>() +
                          " runs past end of file");
      }
      std::vector<double> values(rows * cols);
      for (std::size_t k = 0; k < values.size(); ++k) {
        values[k] = read_le(data, offset + k * sizeof(double));
      }
      params.emplace_back(rows, cols, std::move(values));
    }
    return {Mlp::from_parameters(dims, std::move(params), manifest.at("seed").get<std::uint64_t>(),
                                 manifest.at("init_std").get<double>()),
            manifest.value("hyperparameters", nlohmann::json::object())};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace bsrgan
