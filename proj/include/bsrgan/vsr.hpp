#pragma once

// Recognition stage. Classifiers are trained on synthesized unseen features
// (plus real seen features for the generalized task). A visual-semantic
// classifier sees each feature joined with its class's real description at
// training time, and with the BSR reconstruction at prediction time.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bsrgan/bsr.hpp"
#include "bsrgan/data.hpp"
#include "bsrgan/gan.hpp"
#include "bsrgan/nn.hpp"

namespace bsrgan {

enum class TaskMode {
  zsl,   // targets: unseen classes
  gzsl,  // targets: seen and unseen classes
};

enum class SampleOrigin : std::uint8_t { real_seen, synthesized_unseen };

struct ClassifierTrainSet {
  Matrix features;
  Matrix descriptions;  // row i is attributes[targets[i]]
  std::vector<std::size_t> targets;
  std::vector<SampleOrigin> origin;
  std::vector<std::size_t> target_classes;  // sorted class ids the classifier chooses from
  TaskMode mode = TaskMode::zsl;

  std::size_t size() const noexcept { return targets.size(); }
  Matrix joined_inputs() const { return kernels::concat_cols(features, descriptions); }
};

/// Synthesizes n_syn_per_class features for every unseen class; in GZSL mode
/// the real seen train features are added first.
ClassifierTrainSet build_train_set(const Dataset& data, const SplitSpec& split,
                                   const GanModel& gan, TaskMode mode,
                                   std::size_t n_syn_per_class, std::uint64_t seed);

struct VsrClassifier {
  Mlp net;
  std::vector<std::size_t> class_index_map;  // output position -> class id, ascending
  TaskMode mode = TaskMode::zsl;
  bool uses_descriptions = true;  // false: plain softmax over features
};

struct ClassifierFit {
  VsrClassifier classifier;
  std::vector<double> losses;  // before training, then after each epoch
};

/// Softmax classifier over the train set. With `use_descriptions` the inputs
/// are [feature, description]; otherwise the feature alone.
ClassifierFit train_classifier(const ClassifierTrainSet& train_set,
                               const ClassifierConfig& config, bool use_descriptions = true);

/// Logits -> class ids via class_index_map; ties go to the lowest class id.
std::vector<std::size_t> decode_logits(const VsrClassifier& classifier, const Matrix& logits);

/// Predicts from features alone; descriptions come from `bsr.reconstruct`.
std::vector<std::size_t> predict(const VsrClassifier& classifier, const BsrComponent& bsr,
                                 const Matrix& x_test);
std::vector<std::size_t> predict_visual_only(const VsrClassifier& classifier,
                                             const Matrix& x_test);

}  // namespace bsrgan
