#pragma once

// Conditional WGAN-GP feature generator. The generator maps noise concatenated
// with a class description to a visual feature; the critic scores features; a
// frozen softmax classifier over seen classes supplies the generator's
// classification term.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsrgan/autodiff.hpp"
#include "bsrgan/bsr.hpp"
#include "bsrgan/data.hpp"
#include "bsrgan/nn.hpp"
#include "bsrgan/rng.hpp"

namespace bsrgan {

struct TrainConfig {
  std::size_t n_critic = 5;
  std::size_t batch_size = 64;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  double lambda_rs = 1.0;
  double lambda_ru = 1.0;
  std::optional<double> gamma;  // unset: seen-class share of all classes
  bool condition_critic = false;
  double alpha = 0.01;
  double beta = 10.0;
  std::size_t noise_dim = 0;  // 0: same as the description dim
  std::vector<std::size_t> generator_hidden{64};
  std::vector<std::size_t> critic_hidden{64};
  std::vector<std::size_t> regressor_hidden{64};
  AdamConfig gan_adam = AdamConfig::adversarial();
  AdamConfig regressor_adam;
  bool regressor_real_seen = false;  // also fit R_s on real (seen feature, description) pairs

  bool operator==(const TrainConfig&) const = default;
};

/// Throws ContractError for unusable settings.
void validate(const TrainConfig& config);

struct GanModel {
  Mlp generator;        // [noise_dim + d_attr] -> d_visual
  Mlp critic;           // d_visual (+ d_attr when conditioned) -> 1
  Mlp seen_classifier;  // d_visual -> |C_s| logits, frozen; empty when alpha == 0
  double alpha = 0.01;
  double beta = 10.0;
  std::size_t noise_dim = 0;
  std::size_t d_attr = 0;
  std::size_t d_visual = 0;
  bool condition_critic = false;
  bool trained = false;

  /// Freshly initialized networks; seeds derive from config.seed.
  static GanModel create(std::size_t d_visual, std::size_t d_attr, const TrainConfig& config,
                         std::optional<Mlp> seen_classifier);
};

/// A GanModel bound onto one tape: generator and critic trainable, classifier frozen.
class GanGraph {
 public:
  GanGraph(Tape& tape, const GanModel& model);

  Tape& tape() const noexcept { return *tape_; }
  const GanModel& model() const noexcept { return *model_; }
  const BoundMlp& generator() const noexcept { return generator_; }
  const BoundMlp& critic() const noexcept { return critic_; }

  /// D(x), or D([x, y]) for a conditioned critic. Returns batch x 1.
  Var critic_score(const Var& x, const Matrix& y) const;
  /// Logits of the frozen seen-class classifier.
  Var classify(const Var& x) const;

 private:
  Tape* tape_;
  const GanModel* model_;
  BoundMlp generator_;
  BoundMlp critic_;
  BoundMlp seen_classifier_;
};

/// batch x noise_dim standard normal draws. Both sizes must be positive.
Matrix sample_noise(std::size_t batch, std::size_t noise_dim, SeedStream& rng);

/// G(z, y) without a tape.
Matrix generate(const GanModel& model, const Matrix& y, const Matrix& z);
/// G(z, y) on the graph's tape, differentiable in the generator parameters.
Var generate(const GanGraph& graph, const Matrix& y, const Matrix& z);

/// One interpolation weight per row, uniform on [0, 1].
std::vector<double> sample_mix(std::size_t rows, SeedStream& rng);

/// Mean over rows of (||grad_x D(x_mix)||_2 - 1)^2 with
/// x_mix = mix * x_real + (1 - mix) * x_fake. Differentiable in the critic parameters.
Var gradient_penalty(const GanGraph& graph, const Matrix& x_real, const Matrix& x_fake,
                     const Matrix& y, std::span<const double> mix);
Var gradient_penalty(const GanGraph& graph, const Matrix& x_real, const Matrix& x_fake,
                     const Matrix& y, SeedStream& rng);

struct CriticLoss {
  Var total;    // E[D(fake)] - E[D(real)] + beta * penalty
  Var penalty;  // gradient penalty before weighting
};

CriticLoss critic_loss(const GanGraph& graph, const Matrix& x_real, const Matrix& y,
                       const Matrix& z, std::span<const double> mix);
CriticLoss critic_loss(const GanGraph& graph, const Matrix& x_real, const Matrix& y,
                       const Matrix& z, SeedStream& rng);

/// -E[D(x_fake)] + alpha * NLL of `seen_labels` (positions among the seen
/// classes) under the frozen classifier.
Var generator_loss_on(const GanGraph& graph, const Var& x_fake, const Matrix& y_seen,
                      std::span<const std::size_t> seen_labels);
Var generator_loss(const GanGraph& graph, const Matrix& y_seen,
                   std::span<const std::size_t> seen_labels, const Matrix& z);

/// Linear (or, with hidden layers, MLP) softmax classifier over the seen
/// classes, trained on real train features. Output j is split.seen_classes[j].
Mlp pretrain_seen_classifier(const Dataset& data, const SplitSpec& split,
                             const ClassifierConfig& config);

/// How the reconstruction component takes part in GAN training.
enum class ReconstructionUse {
  none,        // no regressors
  regularize,  // reconstruction losses join the generator objective
  standalone,  // regressors are fitted on synthesized features; the generator ignores them
};

struct GanLogRecord {
  std::size_t step = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  std::optional<double> loss_rs;
  std::optional<double> loss_ru;
  double gp = 0.0;

  bool operator==(const GanLogRecord&) const = default;
};

struct TrainingLog {
  std::vector<GanLogRecord> records;
  /// One JSON object per generator step.
  std::string to_jsonl() const;
};

struct GanTrainResult {
  GanModel model;
  TrainingLog log;
};

/// Alternates n_critic critic updates with one generator update for
/// epochs * max(1, |train| / batch_size) generator steps. When `bsr` is given
/// its regressors are updated on their reconstruction losses every generator
/// step. Throws NumericalError if a loss becomes non-finite.
GanTrainResult train_gan(const Dataset& data, const SplitSpec& split, const TrainConfig& config,
                         const Mlp* seen_classifier, BsrComponent* bsr,
                         ReconstructionUse use = ReconstructionUse::regularize);

/// Maps dataset class ids to their position in `classes`.
std::vector<std::size_t> class_positions(std::span<const std::size_t> labels,
                                         std::span<const std::size_t> classes);

}  // namespace bsrgan
