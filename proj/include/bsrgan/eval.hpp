#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsrgan/bsr.hpp"
#include "bsrgan/data.hpp"
#include "bsrgan/vsr.hpp"

namespace bsrgan {

struct ClassAccuracy {
  std::map<std::size_t, double> per_class;  // percent, only classes with samples
  double mean = 0.0;                        // unweighted over those classes
};

/// Average per-class top-1 accuracy in percent. Every truth must be in class_set;
/// classes without samples are left out of the mean.
ClassAccuracy per_class_top1(std::span<const std::size_t> predictions,
                             std::span<const std::size_t> truths,
                             std::span<const std::size_t> class_set);

/// 2su / (s + u), and 0 when both are 0.
double harmonic(double u, double s);

struct Prediction {
  std::size_t sample_index = 0;
  std::size_t predicted = 0;
  std::size_t truth = 0;

  bool operator==(const Prediction&) const = default;
};

struct EvalReport {
  std::map<std::size_t, double> per_class_acc;
  std::optional<double> a;  // ZSL, unseen classes only
  std::optional<double> u;  // GZSL, unseen test samples
  std::optional<double> s;  // GZSL, seen test samples
  std::optional<double> h;
  nlohmann::json manifest = nlohmann::json::object();
  nlohmann::json provenance = nlohmann::json::object();
  std::vector<Prediction> predictions;  // exported separately as CSV

  nlohmann::json to_json() const;
};

/// a over test_unseen_idx with unseen classes as the search space.
EvalReport evaluate_zsl(const VsrClassifier& classifier, const BsrComponent* bsr,
                        const Dataset& data, const SplitSpec& split);
/// u over test_unseen_idx and s over test_seen_idx, searching all classes; h from both.
EvalReport evaluate_gzsl(const VsrClassifier& classifier, const BsrComponent* bsr,
                         const Dataset& data, const SplitSpec& split);

/// Rows "sample_index,predicted_class,true_class" under a header line.
std::string predictions_csv(std::span<const Prediction> predictions);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace bsrgan
