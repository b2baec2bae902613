#include "bsrgan/eval.hpp"

#include <charconv>
#include <set>

#include "bsrgan/errors.hpp"

namespace bsrgan {

namespace {

std::vector<std::size_t> run_classifier(const VsrClassifier& classifier, const BsrComponent* bsr,
                                        const Matrix& x) {
  if (!classifier.uses_descriptions) return predict_visual_only(classifier, x);
  if (bsr == nullptr) {
    throw ContractError("a description-based classifier needs the BSR component to evaluate");
  }
  return predict(classifier, *bsr, x);
}

std::vector<Prediction> score(const VsrClassifier& classifier, const BsrComponent* bsr,
                              const Dataset& data, const std::vector<std::size_t>& rows) {
  const auto predicted = run_classifier(classifier, bsr, data.features.gather_rows(rows));
  std::vector<Prediction> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back({rows[i], predicted[i], data.labels[rows[i]]});
  }
  return out;
}

ClassAccuracy accuracy_of(const std::vector<Prediction>& predictions,
                          const std::vector<std::size_t>& classes) {
  std::vector<std::size_t> preds;
  std::vector<std::size_t> truths;
  for (const Prediction& p : predictions) {
    preds.push_back(p.predicted);
    truths.push_back(p.truth);
  }
  return per_class_top1(preds, truths, classes);
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

}  // namespace

ClassAccuracy per_class_top1(std::span<const std::size_t> predictions,
                             std::span<const std::size_t> truths,
                             std::span<const std::size_t> class_set) {
  if (predictions.size() != truths.size()) {
    throw DimensionError("per_class_top1: " + std::to_string(predictions.size()) +
                         " predictions for " + std::to_string(truths.size()) + " truths");
  }
  const std::set<std::size_t> classes(class_set.begin(), class_set.end());
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> tally;  // class -> (correct, total)
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (!classes.count(truths[i])) {
      throw ContractError("truth class " + std::to_string(truths[i]) + " is outside class_set");
    }
    auto& [correct, total] = tally[truths[i]];
    ++total;
    if (predictions[i] == truths[i]) ++correct;
  }
  ClassAccuracy out;
  double sum = 0.0;
  for (const auto& [cls, counts] : tally) {
    const double acc =
        100.0 * static_cast<double>(counts.first) / static_cast<double>(counts.second);
    out.per_class[cls] = acc;
    sum += acc;
  }
  if (!tally.empty()) out.mean = sum / static_cast<double>(tally.size());
  return out;
}

double harmonic(double u, double s) {
  if (u + s == 0.0) return 0.0;
  return 2.0 * s * u / (s + u);
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, acc] : per_class_acc) per_class[std::to_string(cls)] = acc;
  return {{"a", optional_json(a)},
          {"u", optional_json(u)},
          {"s", optional_json(s)},
          {"h", optional_json(h)},
          {"per_class_acc", per_class},
          {"manifest", manifest},
          {"provenance", provenance}};
}

EvalReport evaluate_zsl(const VsrClassifier& classifier, const BsrComponent* bsr,
                        const Dataset& data, const SplitSpec& split) {
  if (classifier.mode != TaskMode::zsl) throw ContractError("evaluate_zsl needs a ZSL classifier");
  EvalReport report;
  report.predictions = score(classifier, bsr, data, split.test_unseen_idx);
  const ClassAccuracy acc = accuracy_of(report.predictions, split.unseen_classes);
  report.per_class_acc = acc.per_class;
  report.a = acc.mean;
  return report;
}

EvalReport evaluate_gzsl(const VsrClassifier& classifier, const BsrComponent* bsr,
                         const Dataset& data, const SplitSpec& split) {
  if (classifier.mode != TaskMode::gzsl) {
    throw ContractError("evaluate_gzsl needs a GZSL classifier");
  }
  EvalReport report;
  auto unseen = score(classifier, bsr, data, split.test_unseen_idx);
  auto seen = score(classifier, bsr, data, split.test_seen_idx);
  const ClassAccuracy u = accuracy_of(unseen, split.unseen_classes);
  const ClassAccuracy s = accuracy_of(seen, split.seen_classes);
  report.per_class_acc = u.per_class;
  report.per_class_acc.insert(s.per_class.begin(), s.per_class.end());
  report.u = u.mean;
  report.s = s.mean;
  report.h = harmonic(u.mean, s.mean);
  report.predictions = std::move(unseen);
  report.predictions.insert(report.predictions.end(), seen.begin(), seen.end());
  return report;
}

std::string predictions_csv(std::span<const Prediction> predictions) {
  std::string out = "sample_index,predicted_class,true_class\n";
  for (const Prediction& p : predictions) {
    out += std::to_string(p.sample_index) + "," + std::to_string(p.predicted) + "," +
           std::to_string(p.truth) + "\n";
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace bsrgan
