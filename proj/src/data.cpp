#include "bsrgan/data.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <json.hpp>

#include "bsrgan/checkpoint.hpp"
#include "bsrgan/errors.hpp"
#include "bsrgan/rng.hpp"

namespace bsrgan {

namespace {

// Splits text into lines, dropping one trailing empty line and any '\r'.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void format_error(const std::string& source, std::size_t line,
                               const std::string& what) {
  throw FormatError(source + ":" + std::to_string(line) + ": " + what);
}

void check_indices(const char* what, const std::vector<std::size_t>& idx, std::size_t bound,
                   const char* clause) {
  std::set<std::size_t> seen;
  for (std::size_t i : idx) {
    if (i >= bound) {
      throw ValidationError(clause, std::string(what) + " contains " + std::to_string(i) +
                                        " but the bound is " + std::to_string(bound));
    }
    if (!seen.insert(i).second) {
      throw ValidationError("duplicates", std::string(what) + " lists " + std::to_string(i) +
                                              " twice");
    }
  }
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

void validate(const Dataset& data, const SplitSpec& split) {
  if (data.features.rows() != data.labels.size()) {
    throw ValidationError("row count", std::to_string(data.features.rows()) +
                                           " feature rows but " +
                                           std::to_string(data.labels.size()) + " labels");
  }
  if (data.n_classes() == 0) throw ValidationError("attribute rows", "no classes");
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] >= data.n_classes()) {
      throw ValidationError("label range", "sample " + std::to_string(i) + " has label " +
                                               std::to_string(data.labels[i]) + " but only " +
                                               std::to_string(data.n_classes()) + " classes");
    }
  }
  for (std::size_t k = 0; k < data.n_classes(); ++k) {
    auto row = data.attributes.row_span(k);
    if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) {
      throw ValidationError("attribute rows", "class " + std::to_string(k) + " is all zero");
    }
  }

  check_indices("seen_classes", split.seen_classes, data.n_classes(), "class range");
  check_indices("unseen_classes", split.unseen_classes, data.n_classes(), "class range");
  if (split.seen_classes.empty() || split.unseen_classes.empty()) {
    throw ValidationError("nonempty", "seen and unseen class sets must both be nonempty");
  }
  const std::set<std::size_t> seen(split.seen_classes.begin(), split.seen_classes.end());
  const std::set<std::size_t> unseen(split.unseen_classes.begin(), split.unseen_classes.end());
  for (std::size_t c : unseen) {
    if (seen.count(c)) {
      throw ValidationError("disjointness",
                            "class " + std::to_string(c) + " is both seen and unseen");
    }
  }

  check_indices("train_idx", split.train_idx, data.n_samples(), "sample range");
  check_indices("test_seen_idx", split.test_seen_idx, data.n_samples(), "sample range");
  check_indices("test_unseen_idx", split.test_unseen_idx, data.n_samples(), "sample range");
  if (split.train_idx.empty()) throw ValidationError("nonempty", "train_idx is empty");

  for (std::size_t i : split.train_idx) {
    if (!seen.count(data.labels[i])) {
      throw ValidationError("train labels seen", "train sample " + std::to_string(i) +
                                                     " has unseen label " +
                                                     std::to_string(data.labels[i]));
    }
  }
  for (std::size_t i : split.test_seen_idx) {
    if (!seen.count(data.labels[i])) {
      throw ValidationError("test seen labels", "test_seen sample " + std::to_string(i) +
                                                    " has label " +
                                                    std::to_string(data.labels[i]));
    }
  }
  for (std::size_t i : split.test_unseen_idx) {
    if (!unseen.count(data.labels[i])) {
      throw ValidationError("test unseen labels", "test_unseen sample " + std::to_string(i) +
                                                      " has label " +
                                                      std::to_string(data.labels[i]));
    }
  }
  const std::set<std::size_t> train(split.train_idx.begin(), split.train_idx.end());
  for (std::size_t i : split.test_seen_idx) {
    if (train.count(i)) {
      throw ValidationError("train/test overlap",
                            "sample " + std::to_string(i) + " is in train_idx and test_seen_idx");
    }
  }
}

DataPaths DataPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "features.csv", dir / "attributes.csv", dir / "labels.csv", dir / "splits.json"};
}

Matrix parse_csv_matrix(std::string_view text, const std::string& source) {
  const auto lines = split_lines(text);
  std::vector<double> values;
  std::size_t cols = 0;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::string_view line = lines[li];
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view field =
          trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        format_error(source, li + 1, "cannot parse '" + std::string(field) + "' as a float");
      }
      if (!std::isfinite(v)) format_error(source, li + 1, "non-finite value");
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (li == 0) {
      cols = count;
    } else if (count != cols) {
      format_error(source, li + 1,
                   "expected " + std::to_string(cols) + " columns, found " + std::to_string(count));
    }
  }
  if (lines.empty()) throw FormatError(source + ": empty file");
  return Matrix(lines.size(), cols, std::move(values));
}

std::vector<std::size_t> parse_labels(std::string_view text, const std::string& source) {
  std::vector<std::size_t> labels;
  const auto lines = split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::string_view field = trim(lines[li]);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
      format_error(source, li + 1, "cannot parse '" + std::string(field) + "' as a label");
    }
    labels.push_back(v);
  }
  return labels;
}

SplitSpec parse_splits(std::string_view text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(source + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError(source + ": expected a JSON object");
  static const char* kKeys[] = {"seen_classes", "unseen_classes", "train_idx", "test_seen_idx",
                                "test_unseen_idx"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw FormatError(source + ": unknown key '" + key + "'");
    }
  }
  auto list = [&](const char* key) {
    if (!j.contains(key)) throw FormatError(source + ": missing key '" + key + "'");
    try {
      return j.at(key).get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception&) {
      throw FormatError(source + ": '" + key + "' must be an array of nonnegative integers");
    }
  };
  return {list("seen_classes"), list("unseen_classes"), list("train_idx"), list("test_seen_idx"),
          list("test_unseen_idx")};
}

LabeledData load_dataset(const DataPaths& paths) {
  LabeledData out;
  out.dataset.features = parse_csv_matrix(read_file(paths.features), paths.features.string());
  out.dataset.attributes =
      parse_csv_matrix(read_file(paths.attributes), paths.attributes.string());
  out.dataset.labels = parse_labels(read_file(paths.labels), paths.labels.string());
  out.split = parse_splits(read_file(paths.splits), paths.splits.string());
  validate(out.dataset, out.split);
  return out;
}

std::string format_csv_matrix(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c > 0) out.push_back(',');
      append_double(out, m(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

std::string format_labels(const std::vector<std::size_t>& labels) {
  std::string out;
  for (std::size_t l : labels) {
    out += std::to_string(l);
    out.push_back('\n');
  }
  return out;
}

std::string format_splits(const SplitSpec& split) {
  const nlohmann::json j = {{"seen_classes", split.seen_classes},
                            {"unseen_classes", split.unseen_classes},
                            {"train_idx", split.train_idx},
                            {"test_seen_idx", split.test_seen_idx},
                            {"test_unseen_idx", split.test_unseen_idx}};
  return j.dump() + "\n";
}

void write_dataset(const LabeledData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto paths = DataPaths::in_directory(dir);
  write_file(paths.features, format_csv_matrix(data.dataset.features));
  write_file(paths.attributes, format_csv_matrix(data.dataset.attributes));
  write_file(paths.labels, format_labels(data.dataset.labels));
  write_file(paths.splits, format_splits(data.split));
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string dataset_hash(const LabeledData& data) {
  return sha256_hex(format_csv_matrix(data.dataset.features) + "\x1f" +
                    format_csv_matrix(data.dataset.attributes) + "\x1f" +
                    format_labels(data.dataset.labels) + "\x1f" + format_splits(data.split));
}

void validate(const SyntheticSpec& spec) {
  if (spec.n_seen == 0 || spec.n_seen >= spec.n_classes) {
    throw ValidationError("n_seen", "need 0 < n_seen < n_classes, got n_seen=" +
                                        std::to_string(spec.n_seen) +
                                        " n_classes=" + std::to_string(spec.n_classes));
  }
  if (spec.d_visual == 0 || spec.d_attr == 0) {
    throw ValidationError("dims", "d_visual and d_attr must be positive");
  }
  if (spec.d_attr < 63 && spec.n_classes > (std::size_t{1} << spec.d_attr) - 1) {
    throw ValidationError("dims", std::to_string(spec.n_classes) +
                                      " distinct nonzero binary attribute rows do not fit in " +
                                      std::to_string(spec.d_attr) + " bits");
  }
  if (spec.samples_per_class < 3) {
    throw ValidationError("samples_per_class", "need at least 3 samples per class");
  }
  if (!(spec.cluster_std >= 0.0) || !std::isfinite(spec.cluster_std)) {
    throw ValidationError("cluster_std", "cluster_std must be finite and nonnegative");
  }
}

LabeledData make_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  SeedStream rng(spec.seed, Stream::synthetic_data);

  Matrix attributes(spec.n_classes, spec.d_attr);
  while (true) {
    for (double& v : attributes.data()) v = rng.index(2) == 1 ? 1.0 : 0.0;
    std::set<std::vector<double>> rows;
    bool ok = true;
    for (std::size_t k = 0; k < spec.n_classes && ok; ++k) {
      auto row = attributes.row_span(k);
      ok = std::any_of(row.begin(), row.end(), [](double v) { return v != 0.0; }) &&
           rows.emplace(row.begin(), row.end()).second;
    }
    if (ok) break;
  }

  const Matrix projection = rng.normal_matrix(spec.d_attr, spec.d_visual);
  const Matrix centers = kernels::matmul(attributes, projection);

  LabeledData out;
  Dataset& data = out.dataset;
  data.attributes = attributes;
  data.features = Matrix(spec.n_classes * spec.samples_per_class, spec.d_visual);
  data.labels.resize(data.features.rows());
  for (std::size_t k = 0; k < spec.n_classes; ++k) {
    for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
      const std::size_t row = k * spec.samples_per_class + i;
      data.labels[row] = k;
      for (std::size_t c = 0; c < spec.d_visual; ++c) {
        const double noise = rng.normal();
        data.features(row, c) = spec.cluster_std == 0.0 ? centers(k, c)
                                                        : centers(k, c) + spec.cluster_std * noise;
      }
    }
  }

  const auto holdout = static_cast<std::size_t>(
      std::lround(0.2 * static_cast<double>(spec.samples_per_class)));
  SplitSpec& split = out.split;
  for (std::size_t k = 0; k < spec.n_classes; ++k) {
    const bool is_seen = k < spec.n_seen;
    (is_seen ? split.seen_classes : split.unseen_classes).push_back(k);
    for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
      const std::size_t row = k * spec.samples_per_class + i;
      if (!is_seen) {
        split.test_unseen_idx.push_back(row);
      } else if (i + holdout < spec.samples_per_class) {
        split.train_idx.push_back(row);
      } else {
        split.test_seen_idx.push_back(row);
      }
    }
  }
  validate(data, split);
  return out;
}

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) throw DimensionError("standardizer mean/scale mismatch");
}

Standardizer Standardizer::fit(const Matrix& features, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw ContractError("cannot fit a standardizer on zero rows");
  const std::size_t d = features.cols();
  std::vector<double> mean(d, 0.0);
  std::vector<double> scale(d, 0.0);
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < d; ++c) mean[c] += features(r, c);
  for (double& m : mean) m /= static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = features(r, c) - mean[c];
      scale[c] += diff * diff;
    }
  }
  for (double& s : scale) {
    s = std::sqrt(s / static_cast<double>(rows.size()));
    if (s < 1e-12) s = 1.0;
  }
  return Standardizer(std::move(mean), std::move(scale));
}

Matrix Standardizer::apply(const Matrix& features) const {
  if (features.cols() != mean_.size()) {
    throw DimensionError("standardizer fitted on " + std::to_string(mean_.size()) +
                         " dims applied to " + features.shape_string());
  }
  Matrix out = features;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row_span(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean_[c]) / scale_[c];
  }
  return out;
}

}  // namespace bsrgan
