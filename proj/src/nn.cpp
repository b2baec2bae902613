#include "bsrgan/nn.hpp"

#include <algorithm>
#include <cmath>

#include "bsrgan/errors.hpp"
#include "bsrgan/rng.hpp"

namespace bsrgan {

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw ContractError("an MLP needs at least two layer dims");
  for (std::size_t d : dims) {
    if (d == 0) throw ContractError("MLP layer dims must be positive");
  }
}

}  // namespace

Mlp Mlp::create(std::vector<std::size_t> layer_dims, std::uint64_t seed, double init_std) {
  check_dims(layer_dims);
  SeedStream rng(seed);
  std::vector<Matrix> params;
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    params.push_back(rng.normal_matrix(layer_dims[i], layer_dims[i + 1], init_std));
    params.emplace_back(1, layer_dims[i + 1]);
  }
  return from_parameters(std::move(layer_dims), std::move(params), seed, init_std);
}

Mlp Mlp::from_parameters(std::vector<std::size_t> layer_dims, std::vector<Matrix> params,
                         std::uint64_t seed, double init_std) {
  check_dims(layer_dims);
  if (params.size() != 2 * (layer_dims.size() - 1)) {
    throw DimensionError("expected " + std::to_string(2 * (layer_dims.size() - 1)) +
                         " parameter tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    const Matrix& w = params[2 * i];
    const Matrix& b = params[2 * i + 1];
    if (w.rows() != layer_dims[i] || w.cols() != layer_dims[i + 1] || b.rows() != 1 ||
        b.cols() != layer_dims[i + 1]) {
      throw DimensionError("layer " + std::to_string(i) + " parameters " + w.shape_string() +
                           "/" + b.shape_string() + " do not chain with dims");
    }
  }
  Mlp m;
  m.dims_ = std::move(layer_dims);
  m.params_ = std::move(params);
  m.seed_ = seed;
  m.init_std_ = init_std;
  return m;
}

Matrix Mlp::forward(const Matrix& x) const {
  if (x.cols() != input_dim()) {
    throw DimensionError("MLP input " + x.shape_string() + " but first layer takes " +
                         std::to_string(input_dim()) + " columns");
  }
  Matrix h = x;
  for (std::size_t layer = 0; layer < layer_count(); ++layer) {
    h = kernels::add_rowwise(kernels::matmul(h, weight(layer)), bias(layer));
    if (layer + 1 < layer_count()) h = kernels::relu(h);
  }
  return h;
}

BoundMlp Mlp::bind(Tape& tape, bool trainable) const {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const Matrix& p : params_) vars.push_back(trainable ? tape.parameter(p) : tape.constant(p));
  return BoundMlp(dims_, std::move(vars));
}

Var BoundMlp::forward(const Var& x) const {
  if (x.cols() != input_dim()) {
    throw DimensionError("MLP input " + x.value().shape_string() + " but first layer takes " +
                         std::to_string(input_dim()) + " columns");
  }
  const std::size_t layers = params_.size() / 2;
  Var h = x;
  for (std::size_t layer = 0; layer < layers; ++layer) {
    h = add(matmul(h, params_[2 * layer]), params_[2 * layer + 1]);
    if (layer + 1 < layers) h = relu(h);
  }
  return h;
}

Var softmax_nll(const Var& logits, std::span<const std::size_t> targets) {
  if (targets.size() != logits.rows()) {
    throw DimensionError("softmax_nll: " + std::to_string(targets.size()) + " targets for " +
                         logits.value().shape_string() + " logits");
  }
  Matrix one_hot(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] >= logits.cols()) {
      throw ContractError("target " + std::to_string(targets[r]) + " outside " +
                          std::to_string(logits.cols()) + " classes");
    }
    one_hot(r, targets[r]) = 1.0;
  }
  Var picked = sum(mul(log_softmax(logits), logits.tape().constant(std::move(one_hot))));
  return scale(picked, -1.0 / static_cast<double>(targets.size()));
}

std::vector<std::size_t> argmax_rows(const Matrix& m) {
  std::vector<std::size_t> out(m.rows(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row_span(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[r] = best;
  }
  return out;
}

Adam::Adam(AdamConfig config, std::span<const Matrix> params) : config_(config) {
  for (const Matrix& p : params) {
    first_.emplace_back(p.rows(), p.cols());
    second_.emplace_back(p.rows(), p.cols());
  }
}

void Adam::step(std::span<Matrix> params, std::span<const Matrix> grads) {
  if (params.size() != first_.size() || grads.size() != params.size()) {
    throw ContractError("Adam::step got " + std::to_string(params.size()) + " params and " +
                        std::to_string(grads.size()) + " grads for " +
                        std::to_string(first_.size()) + " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols() ||
        params[i].rows() != first_[i].rows() || params[i].cols() != first_[i].cols()) {
      throw ContractError("Adam::step shape mismatch at slot " + std::to_string(i) + ": param " +
                          params[i].shape_string() + " grad " + grads[i].shape_string());
    }
  }
  ++steps_;
  const auto t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = first_[i].data();
    auto v = second_[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

std::vector<Matrix> gradient_values(const Var& loss, std::span<const Var> params) {
  std::vector<Var> grads = backward(loss, params);
  std::vector<Matrix> out;
  out.reserve(grads.size());
  for (const Var& g : grads) out.push_back(g.value());
  return out;
}


double softmax_nll_value(const Mlp& net, const Matrix& inputs,
                         std::span<const std::size_t> targets) {
  const Matrix log_probs = kernels::log_softmax_rows(net.forward(inputs));
  if (targets.size() != log_probs.rows()) {
    throw DimensionError("softmax_nll_value: target count does not match input rows");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] >= log_probs.cols()) throw ContractError("target outside classifier outputs");
    total -= log_probs(r, targets[r]);
  }
  return total / static_cast<double>(targets.size());
}

std::vector<double> fit_softmax(Mlp& net, const Matrix& inputs,
                                std::span<const std::size_t> targets,
                                const ClassifierConfig& config) {
  if (inputs.rows() == 0) throw ContractError("cannot train a classifier on zero samples");
  if (config.batch_size == 0) throw ContractError("classifier batch_size must be positive");
  SeedStream rng(config.seed);
  Adam optimizer(config.adam, net.parameters());
  std::vector<std::size_t> order(inputs.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> losses{softmax_nll_value(net, inputs, targets)};
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, count);
      std::vector<std::size_t> batch_targets(count);
      for (std::size_t i = 0; i < count; ++i) batch_targets[i] = targets[batch[i]];

      Tape tape;
      const BoundMlp bound = net.bind(tape);
      const Var loss = softmax_nll(bound.forward(tape.constant(inputs.gather_rows(batch))),
                                   batch_targets);
      optimizer.step(net.parameters(), gradient_values(loss, bound.parameters()));
    }
    losses.push_back(softmax_nll_value(net, inputs, targets));
  }
  return losses;
}

}  // namespace bsrgan
