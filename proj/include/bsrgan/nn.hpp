#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bsrgan/autodiff.hpp"
#include "bsrgan/matrix.hpp"

namespace bsrgan {

class BoundMlp;

/// Fully connected network: ReLU between layers, linear output layer.
/// Layer i computes x * W_i + b_i with W_i of shape dims[i] x dims[i+1].
class Mlp {
 public:
  static constexpr double kDefaultInitStd = 0.02;

  Mlp() = default;

  /// Weights ~ N(0, init_std^2) from `seed`, biases zero. Needs at least two dims.
  static Mlp create(std::vector<std::size_t> layer_dims, std::uint64_t seed,
                    double init_std = kDefaultInitStd);
  /// Builds from explicit parameters, in the order W0, b0, W1, b1, ...
  static Mlp from_parameters(std::vector<std::size_t> layer_dims, std::vector<Matrix> params,
                             std::uint64_t seed = 0, double init_std = kDefaultInitStd);

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  std::size_t input_dim() const noexcept { return dims_.front(); }
  std::size_t output_dim() const noexcept { return dims_.back(); }
  std::size_t layer_count() const noexcept { return dims_.size() - 1; }
  std::uint64_t seed() const noexcept { return seed_; }
  double init_std() const noexcept { return init_std_; }

  Matrix& weight(std::size_t layer) { return params_[2 * layer]; }
  const Matrix& weight(std::size_t layer) const { return params_[2 * layer]; }
  Matrix& bias(std::size_t layer) { return params_[2 * layer + 1]; }
  const Matrix& bias(std::size_t layer) const { return params_[2 * layer + 1]; }

  std::span<Matrix> parameters() noexcept { return params_; }
  std::span<const Matrix> parameters() const noexcept { return params_; }

  /// Forward pass without a tape.
  Matrix forward(const Matrix& x) const;

  /// Places the parameters on `tape`; trainable ones receive gradients.
  BoundMlp bind(Tape& tape, bool trainable = true) const;

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<Matrix> params_;
  std::uint64_t seed_ = 0;
  double init_std_ = kDefaultInitStd;
};

/// An Mlp's parameters recorded on one tape.
class BoundMlp {
 public:
  BoundMlp() = default;
  BoundMlp(std::vector<std::size_t> dims, std::vector<Var> params)
      : dims_(std::move(dims)), params_(std::move(params)) {}

  Var forward(const Var& x) const;
  std::span<const Var> parameters() const noexcept { return params_; }
  std::size_t input_dim() const noexcept { return dims_.front(); }

 private:
  std::vector<std::size_t> dims_;
  std::vector<Var> params_;
};

/// Mean negative log-likelihood of `targets` (column positions) under a rowwise softmax.
Var softmax_nll(const Var& logits, std::span<const std::size_t> targets);

/// Index of the largest entry of each row; ties go to the lowest index.
std::vector<std::size_t> argmax_rows(const Matrix& m);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Settings used for the generator and critic.
  static AdamConfig adversarial() { return {1e-4, 0.5, 0.9, 1e-8}; }
  bool operator==(const AdamConfig&) const = default;
};

/// Adam with bias correction. Holds one moment pair per parameter tensor.
class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig config, std::span<const Matrix> params);

  void step(std::span<Matrix> params, std::span<const Matrix> grads);

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return steps_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  std::uint64_t steps_ = 0;
};

/// Gradient values for `params`, in order.
std::vector<Matrix> gradient_values(const Var& loss, std::span<const Var> params);

/// Minibatch softmax training shared by every classifier in the project.
struct ClassifierConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  std::vector<std::size_t> hidden;  // empty: linear softmax
  AdamConfig adam;
  std::uint64_t seed = 0;

  bool operator==(const ClassifierConfig&) const = default;
};

/// Full-set mean NLL, without a tape.
double softmax_nll_value(const Mlp& net, const Matrix& inputs,
                         std::span<const std::size_t> targets);

/// Trains `net` with Adam on shuffled minibatches. Returns the full-set loss
/// before training followed by the loss after each epoch.
std::vector<double> fit_softmax(Mlp& net, const Matrix& inputs,
                                std::span<const std::size_t> targets,
                                const ClassifierConfig& config);

}  // namespace bsrgan
