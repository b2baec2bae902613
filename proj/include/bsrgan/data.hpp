#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bsrgan/matrix.hpp"

namespace bsrgan {

/// Visual features with per-class semantic descriptions.
struct Dataset {
  Matrix features;    // n_samples x d_visual
  Matrix attributes;  // n_classes x d_attr, row k describes class k
  std::vector<std::size_t> labels;

  std::size_t n_samples() const noexcept { return features.rows(); }
  std::size_t n_classes() const noexcept { return attributes.rows(); }
  std::size_t d_visual() const noexcept { return features.cols(); }
  std::size_t d_attr() const noexcept { return attributes.cols(); }

  bool operator==(const Dataset&) const = default;
};

/// Seen/unseen class partition and the sample partitions derived from it.
struct SplitSpec {
  std::vector<std::size_t> seen_classes;
  std::vector<std::size_t> unseen_classes;
  std::vector<std::size_t> train_idx;        // seen-class samples used for training
  std::vector<std::size_t> test_seen_idx;    // held-out seen samples (GZSL)
  std::vector<std::size_t> test_unseen_idx;  // unseen-class samples

  bool operator==(const SplitSpec&) const = default;
};

struct LabeledData {
  Dataset dataset;
  SplitSpec split;
};

/// Throws ValidationError naming the first violated clause.
void validate(const Dataset& data, const SplitSpec& split);

struct DataPaths {
  std::filesystem::path features;
  std::filesystem::path attributes;
  std::filesystem::path labels;
  std::filesystem::path splits;

  static DataPaths in_directory(const std::filesystem::path& dir);
};

LabeledData load_dataset(const DataPaths& paths);

// Parsers for the on-disk formats; `source` names the input in error messages.
Matrix parse_csv_matrix(std::string_view text, const std::string& source);
std::vector<std::size_t> parse_labels(std::string_view text, const std::string& source);
SplitSpec parse_splits(std::string_view text, const std::string& source);

std::string format_csv_matrix(const Matrix& m);
std::string format_labels(const std::vector<std::size_t>& labels);
std::string format_splits(const SplitSpec& split);

/// Writes features.csv, attributes.csv, labels.csv and splits.json into `dir`.
void write_dataset(const LabeledData& data, const std::filesystem::path& dir);

/// SHA-256 (hex) over the canonical serialization of dataset and split.
std::string dataset_hash(const LabeledData& data);
std::string sha256_hex(std::string_view bytes);

struct SyntheticSpec {
  std::size_t n_classes = 10;
  std::size_t n_seen = 6;
  std::size_t d_visual = 32;
  std::size_t d_attr = 16;
  std::size_t samples_per_class = 100;
  double cluster_std = 0.5;
  std::uint64_t seed = 0;

  bool operator==(const SyntheticSpec&) const = default;
};

/// Throws ValidationError when `spec` cannot produce a benchmark.
void validate(const SyntheticSpec& spec);

/// Binary per-class attributes, class centers through a fixed random linear map,
/// Gaussian samples around the centers. The first n_seen classes are seen and the
/// last 20% of each seen class's samples are held out for seen-class testing.
LabeledData make_synthetic(const SyntheticSpec& spec);

/// Per-dimension affine rescaling to zero mean and unit variance, fitted on a
/// subset of rows. Constant dimensions keep scale 1.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<double> mean, std::vector<double> scale);

  static Standardizer fit(const Matrix& features, const std::vector<std::size_t>& rows);

  Matrix apply(const Matrix& features) const;

  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& scale() const noexcept { return scale_; }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

}  // namespace bsrgan
