#include "bsrgan/vsr.hpp"

#include <algorithm>
#include <set>

#include "bsrgan/errors.hpp"
#include "bsrgan/rng.hpp"

namespace bsrgan {

ClassifierTrainSet build_train_set(const Dataset& data, const SplitSpec& split,
                                   const GanModel& gan, TaskMode mode,
                                   std::size_t n_syn_per_class, std::uint64_t seed) {
  if (!gan.trained) throw ContractError("build_train_set needs a trained generator");
  if (n_syn_per_class == 0) throw ContractError("n_syn_per_class must be at least 1");

  ClassifierTrainSet ts;
  ts.mode = mode;
  std::set<std::size_t> targets(split.unseen_classes.begin(), split.unseen_classes.end());
  if (mode == TaskMode::gzsl) targets.insert(split.seen_classes.begin(), split.seen_classes.end());
  ts.target_classes.assign(targets.begin(), targets.end());

  std::vector<std::size_t> labels;
  Matrix features(0, data.d_visual());
  if (mode == TaskMode::gzsl) {
    features = data.features.gather_rows(split.train_idx);
    for (std::size_t i : split.train_idx) {
      labels.push_back(data.labels[i]);
      ts.origin.push_back(SampleOrigin::real_seen);
    }
  }

  SeedStream rng(seed);
  std::vector<std::size_t> synth_labels;
  for (std::size_t c : split.unseen_classes) synth_labels.insert(synth_labels.end(), n_syn_per_class, c);
  const Matrix y = data.attributes.gather_rows(synth_labels);
  const Matrix z = sample_noise(synth_labels.size(), gan.noise_dim, rng);
  features = kernels::concat_rows(features, generate(gan, y, z));
  labels.insert(labels.end(), synth_labels.begin(), synth_labels.end());
  ts.origin.insert(ts.origin.end(), synth_labels.size(), SampleOrigin::synthesized_unseen);

  ts.features = std::move(features);
  ts.descriptions = data.attributes.gather_rows(labels);
  ts.targets = std::move(labels);
  return ts;
}

ClassifierFit train_classifier(const ClassifierTrainSet& train_set,
                               const ClassifierConfig& config, bool use_descriptions) {
  const std::set<std::size_t> present(train_set.targets.begin(), train_set.targets.end());
  if (present.size() < 2) throw ContractError("a classifier needs at least two target classes");

  VsrClassifier clf;
  clf.class_index_map = train_set.target_classes;
  std::sort(clf.class_index_map.begin(), clf.class_index_map.end());
  clf.mode = train_set.mode;
  clf.uses_descriptions = use_descriptions;

  const Matrix inputs = use_descriptions ? train_set.joined_inputs() : train_set.features;
  const auto targets = class_positions(train_set.targets, clf.class_index_map);

  std::vector<std::size_t> dims{inputs.cols()};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(clf.class_index_map.size());
  clf.net = Mlp::create(dims, derive_seed(config.seed, Stream::classifier_init));

  ClassifierConfig fit_config = config;
  fit_config.seed = derive_seed(config.seed, Stream::classifier_batches);
  auto losses = fit_softmax(clf.net, inputs, targets, fit_config);
  return {std::move(clf), std::move(losses)};
}

std::vector<std::size_t> decode_logits(const VsrClassifier& classifier, const Matrix& logits) {
  if (logits.cols() != classifier.class_index_map.size()) {
    throw DimensionError("logits " + logits.shape_string() + " for " +
                         std::to_string(classifier.class_index_map.size()) + " classes");
  }
  std::vector<std::size_t> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row_span(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best] ||
          (row[c] == row[best] &&
           classifier.class_index_map[c] < classifier.class_index_map[best])) {
        best = c;
      }
    }
    out[r] = classifier.class_index_map[best];
  }
  return out;
}

std::vector<std::size_t> predict(const VsrClassifier& classifier, const BsrComponent& bsr,
                                 const Matrix& x_test) {
  if (!classifier.uses_descriptions) {
    throw ContractError("predict() needs a classifier trained with descriptions");
  }
  if (x_test.cols() != bsr.seen_regressor().input_dim()) {
    throw DimensionError("test features " + x_test.shape_string() + " but regressors take " +
                         std::to_string(bsr.seen_regressor().input_dim()) + " columns");
  }
  const Matrix inputs = kernels::concat_cols(x_test, reconstruct(bsr, x_test));
  return decode_logits(classifier, classifier.net.forward(inputs));
}

std::vector<std::size_t> predict_visual_only(const VsrClassifier& classifier,
                                             const Matrix& x_test) {
  if (classifier.uses_descriptions) {
    throw ContractError("predict_visual_only() needs a classifier trained on features alone");
  }
  return decode_logits(classifier, classifier.net.forward(x_test));
}

}  // namespace bsrgan
