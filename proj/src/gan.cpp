#include "bsrgan/gan.hpp"

#include <cmath>
#include <map>

#include <json.hpp>

#include "bsrgan/errors.hpp"

namespace bsrgan {

namespace {

std::vector<std::size_t> chain(std::size_t in, const std::vector<std::size_t>& hidden,
                               std::size_t out) {
  std::vector<std::size_t> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

void check_finite(std::size_t step, const char* what, double v) {
  if (!std::isfinite(v)) throw NumericalError(step, what);
}

// Mixes real and fake rows: mix[r] * real + (1 - mix[r]) * fake.
Matrix interpolate(const Matrix& real, const Matrix& fake, std::span<const double> mix) {
  if (real.rows() != fake.rows() || real.cols() != fake.cols()) {
    throw DimensionError("gradient penalty: real " + real.shape_string() + " vs fake " +
                         fake.shape_string());
  }
  if (mix.size() != real.rows()) {
    throw DimensionError("gradient penalty: " + std::to_string(mix.size()) +
                         " mixing weights for " + std::to_string(real.rows()) + " rows");
  }
  Matrix out(real.rows(), real.cols());
  for (std::size_t r = 0; r < real.rows(); ++r) {
    for (std::size_t c = 0; c < real.cols(); ++c) {
      out(r, c) = mix[r] * real(r, c) + (1.0 - mix[r]) * fake(r, c);
    }
  }
  return out;
}

}  // namespace

void validate(const TrainConfig& config) {
  if (config.n_critic < 1) throw ContractError("n_critic must be at least 1");
  if (config.batch_size < 1) throw ContractError("batch_size must be positive");
  if (!(config.beta > 0.0)) throw ContractError("beta must be positive");
  if (!(config.alpha >= 0.0)) throw ContractError("alpha must be nonnegative");
  if (!(config.lambda_rs >= 0.0) || !(config.lambda_ru >= 0.0)) {
    throw ContractError("reconstruction weights must be nonnegative");
  }
  if (config.gamma) check_gamma(*config.gamma);
}

GanModel GanModel::create(std::size_t d_visual, std::size_t d_attr, const TrainConfig& config,
                          std::optional<Mlp> seen_classifier) {
  validate(config);
  GanModel m;
  m.alpha = config.alpha;
  m.beta = config.beta;
  m.noise_dim = config.noise_dim == 0 ? d_attr : config.noise_dim;
  m.d_attr = d_attr;
  m.d_visual = d_visual;
  m.condition_critic = config.condition_critic;
  m.generator = Mlp::create(chain(m.noise_dim + d_attr, config.generator_hidden, d_visual),
                            derive_seed(config.seed, Stream::generator_init));
  m.critic = Mlp::create(
      chain(d_visual + (config.condition_critic ? d_attr : 0), config.critic_hidden, 1),
      derive_seed(config.seed, Stream::critic_init));
  if (seen_classifier) {
    if (seen_classifier->input_dim() != d_visual) {
      throw DimensionError("seen classifier takes " +
                           std::to_string(seen_classifier->input_dim()) + " inputs, features have " +
                           std::to_string(d_visual));
    }
    m.seen_classifier = std::move(*seen_classifier);
  } else if (config.alpha > 0.0) {
    throw ContractError("alpha > 0 needs a pretrained seen classifier");
  }
  return m;
}

GanGraph::GanGraph(Tape& tape, const GanModel& model)
    : tape_(&tape),
      model_(&model),
      generator_(model.generator.bind(tape)),
      critic_(model.critic.bind(tape)) {
  if (!model.seen_classifier.layer_dims().empty()) {
    seen_classifier_ = model.seen_classifier.bind(tape, /*trainable=*/false);
  }
}

Var GanGraph::critic_score(const Var& x, const Matrix& y) const {
  if (!model_->condition_critic) return critic_.forward(x);
  return critic_.forward(concat_cols(x, tape_->constant(y)));
}

Var GanGraph::classify(const Var& x) const {
  if (seen_classifier_.parameters().empty()) {
    throw ContractError("GAN model has no seen-class classifier");
  }
  return seen_classifier_.forward(x);
}

Matrix sample_noise(std::size_t batch, std::size_t noise_dim, SeedStream& rng) {
  if (batch == 0 || noise_dim == 0) {
    throw ContractError("sample_noise needs positive batch and noise_dim");
  }
  return rng.normal_matrix(batch, noise_dim);
}

Matrix generate(const GanModel& model, const Matrix& y, const Matrix& z) {
  if (y.rows() != z.rows() || y.cols() != model.d_attr || z.cols() != model.noise_dim) {
    throw DimensionError("generate: descriptions " + y.shape_string() + ", noise " +
                         z.shape_string());
  }
  return model.generator.forward(kernels::concat_cols(z, y));
}

Var generate(const GanGraph& graph, const Matrix& y, const Matrix& z) {
  const GanModel& model = graph.model();
  if (y.rows() != z.rows() || y.cols() != model.d_attr || z.cols() != model.noise_dim) {
    throw DimensionError("generate: descriptions " + y.shape_string() + ", noise " +
                         z.shape_string());
  }
  return graph.generator().forward(graph.tape().constant(kernels::concat_cols(z, y)));
}

std::vector<double> sample_mix(std::size_t rows, SeedStream& rng) {
  std::vector<double> mix(rows);
  for (double& m : mix) m = rng.uniform();
  return mix;
}

Var gradient_penalty(const GanGraph& graph, const Matrix& x_real, const Matrix& x_fake,
                     const Matrix& y, std::span<const double> mix) {
  Tape& tape = graph.tape();
  const Var x_mix = tape.parameter(interpolate(x_real, x_fake, mix));
  const Var scores = graph.critic_score(x_mix, y);
  const Var input_grad = backward(sum(scores), std::span(&x_mix, 1), GradMode::create_graph)[0];
  const Var deviation = sub(l2_norm_rows(input_grad), tape.constant(Matrix(x_real.rows(), 1, 1.0)));
  return mean(square(deviation));
}

Var gradient_penalty(const GanGraph& graph, const Matrix& x_real, const Matrix& x_fake,
                     const Matrix& y, SeedStream& rng) {
  return gradient_penalty(graph, x_real, x_fake, y, sample_mix(x_real.rows(), rng));
}

CriticLoss critic_loss(const GanGraph& graph, const Matrix& x_real, const Matrix& y,
                       const Matrix& z, std::span<const double> mix) {
  if (x_real.rows() != y.rows()) {
    throw DimensionError("critic_loss: real " + x_real.shape_string() + " vs descriptions " +
                         y.shape_string());
  }
  Tape& tape = graph.tape();
  const Matrix x_fake = generate(graph.model(), y, z);
  const Var fake_score = mean(graph.critic_score(tape.constant(x_fake), y));
  const Var real_score = mean(graph.critic_score(tape.constant(x_real), y));
  const Var penalty = gradient_penalty(graph, x_real, x_fake, y, mix);
  const Var total = add(sub(fake_score, real_score), scale(penalty, graph.model().beta));
  return {total, penalty};
}

CriticLoss critic_loss(const GanGraph& graph, const Matrix& x_real, const Matrix& y,
                       const Matrix& z, SeedStream& rng) {
  return critic_loss(graph, x_real, y, z, sample_mix(x_real.rows(), rng));
}

Var generator_loss_on(const GanGraph& graph, const Var& x_fake, const Matrix& y_seen,
                      std::span<const std::size_t> seen_labels) {
  if (seen_labels.size() != x_fake.rows()) {
    throw DimensionError("generator_loss: " + std::to_string(seen_labels.size()) +
                         " labels for " + std::to_string(x_fake.rows()) + " rows");
  }
  const GanModel& model = graph.model();
  Var loss = scale(mean(graph.critic_score(x_fake, y_seen)), -1.0);
  if (model.alpha > 0.0) {
    const std::size_t n_seen = model.seen_classifier.output_dim();
    for (std::size_t label : seen_labels) {
      if (label >= n_seen) {
        throw ContractError("label position " + std::to_string(label) + " outside " +
                            std::to_string(n_seen) + " seen classes");
      }
    }
    loss = add(loss, scale(softmax_nll(graph.classify(x_fake), seen_labels), model.alpha));
  }
  return loss;
}

Var generator_loss(const GanGraph& graph, const Matrix& y_seen,
                   std::span<const std::size_t> seen_labels, const Matrix& z) {
  return generator_loss_on(graph, generate(graph, y_seen, z), y_seen, seen_labels);
}

std::vector<std::size_t> class_positions(std::span<const std::size_t> labels,
                                         std::span<const std::size_t> classes) {
  std::map<std::size_t, std::size_t> position;
  for (std::size_t i = 0; i < classes.size(); ++i) position[classes[i]] = i;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (std::size_t label : labels) {
    auto it = position.find(label);
    if (it == position.end()) {
      throw ContractError("class " + std::to_string(label) + " is not in the target class set");
    }
    out.push_back(it->second);
  }
  return out;
}

Mlp pretrain_seen_classifier(const Dataset& data, const SplitSpec& split,
                             const ClassifierConfig& config) {
  if (split.seen_classes.size() < 2) {
    throw ContractError("the seen-class classifier needs at least two seen classes");
  }
  if (split.train_idx.empty()) throw ContractError("empty train split");
  std::vector<std::size_t> labels;
  labels.reserve(split.train_idx.size());
  for (std::size_t i : split.train_idx) labels.push_back(data.labels[i]);
  const auto targets = class_positions(labels, split.seen_classes);

  Mlp net = Mlp::create(chain(data.d_visual(), config.hidden, split.seen_classes.size()),
                        derive_seed(config.seed, Stream::seen_classifier_init));
  ClassifierConfig fit_config = config;
  fit_config.seed = derive_seed(config.seed, Stream::seen_classifier_batches);
  fit_softmax(net, data.features.gather_rows(split.train_idx), targets, fit_config);
  return net;
}

std::string TrainingLog::to_jsonl() const {
  std::string out;
  for (const GanLogRecord& r : records) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["loss_d"] = r.loss_d;
    j["loss_g"] = r.loss_g;
    j["loss_rs"] = r.loss_rs ? nlohmann::ordered_json(*r.loss_rs) : nlohmann::ordered_json();
    j["loss_ru"] = r.loss_ru ? nlohmann::ordered_json(*r.loss_ru) : nlohmann::ordered_json();
    j["gp"] = r.gp;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

GanTrainResult train_gan(const Dataset& data, const SplitSpec& split, const TrainConfig& config,
                         const Mlp* seen_classifier, BsrComponent* bsr, ReconstructionUse use) {
  validate(config);
  validate(data, split);
  if (use != ReconstructionUse::none && bsr == nullptr) {
    throw ContractError("reconstruction use requested without a BSR component");
  }
  if (use == ReconstructionUse::none) bsr = nullptr;

  GanTrainResult result{
      GanModel::create(data.d_visual(), data.d_attr(), config,
                       seen_classifier ? std::optional<Mlp>(*seen_classifier) : std::nullopt),
      {}};
  GanModel& model = result.model;
  if (config.epochs == 0) return result;

  SeedStream batch_rng(config.seed, Stream::gan_batches);
  SeedStream noise_rng(config.seed, Stream::gan_noise);
  SeedStream mix_rng(config.seed, Stream::penalty_mix);

  Adam generator_opt(config.gan_adam, model.generator.parameters());
  Adam critic_opt(config.gan_adam, model.critic.parameters());
  Adam rs_opt;
  Adam ru_opt;
  if (bsr) {
    rs_opt = Adam(config.regressor_adam, bsr->r_s.parameters());
    if (!bsr->shared) ru_opt = Adam(config.regressor_adam, bsr->r_u.parameters());
  }

  const std::size_t batch = config.batch_size;
  const std::size_t steps_per_epoch = std::max<std::size_t>(1, split.train_idx.size() / batch);
  const std::size_t total_steps = config.epochs * steps_per_epoch;

  auto draw_seen = [&](Matrix& x, Matrix& y, std::vector<std::size_t>& positions) {
    std::vector<std::size_t> rows(batch);
    std::vector<std::size_t> labels(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      rows[i] = split.train_idx[batch_rng.index(split.train_idx.size())];
      labels[i] = data.labels[rows[i]];
    }
    x = data.features.gather_rows(rows);
    y = data.attributes.gather_rows(labels);
    positions = class_positions(labels, split.seen_classes);
  };

  for (std::size_t step = 0; step < total_steps; ++step) {
    GanLogRecord record;
    record.step = step;

    for (std::size_t it = 0; it < config.n_critic; ++it) {
      Matrix x_real;
      Matrix y;
      std::vector<std::size_t> positions;
      draw_seen(x_real, y, positions);
      const Matrix z = sample_noise(batch, model.noise_dim, noise_rng);

      Tape tape;
      const GanGraph graph(tape, model);
      const CriticLoss loss = critic_loss(graph, x_real, y, z, mix_rng);
      record.loss_d = loss.total.item();
      record.gp = loss.penalty.item();
      check_finite(step, "critic loss", record.loss_d);
      critic_opt.step(model.critic.parameters(),
                      gradient_values(loss.total, graph.critic().parameters()));
    }

    Matrix x_real;
    Matrix y_seen;
    std::vector<std::size_t> positions;
    draw_seen(x_real, y_seen, positions);
    const Matrix z_seen = sample_noise(batch, model.noise_dim, noise_rng);

    Tape tape;
    const GanGraph graph(tape, model);
    const Var fake_seen = generate(graph, y_seen, z_seen);
    const Var adversarial = generator_loss_on(graph, fake_seen, y_seen, positions);
    record.loss_g = adversarial.item();
    check_finite(step, "generator loss", record.loss_g);
    Var generator_objective = adversarial;

    if (bsr) {
      std::vector<std::size_t> unseen_labels(batch);
      for (std::size_t& c : unseen_labels) {
        c = split.unseen_classes[batch_rng.index(split.unseen_classes.size())];
      }
      const Matrix y_unseen = data.attributes.gather_rows(unseen_labels);
      const Matrix z_unseen = sample_noise(batch, model.noise_dim, noise_rng);
      const Var fake_unseen = generate(graph, y_unseen, z_unseen);

      const BsrGraph regressors(tape, *bsr);
      const Var rs = loss_rs(regressors, fake_seen, y_seen);
      const Var ru = loss_ru(regressors, fake_unseen, y_unseen);
      record.loss_rs = rs.item();
      record.loss_ru = ru.item();
      check_finite(step, "seen reconstruction loss", *record.loss_rs);
      check_finite(step, "unseen reconstruction loss", *record.loss_ru);
      if (use == ReconstructionUse::regularize) {
        generator_objective = add(generator_objective,
                                  add(scale(rs, config.lambda_rs), scale(ru, config.lambda_ru)));
      }

      Var regressor_objective = add(rs, ru);
      if (config.regressor_real_seen) {
        const Var with_real = concat_rows(fake_seen, tape.constant(x_real));
        regressor_objective =
            add(loss_rs(regressors, with_real, kernels::concat_rows(y_seen, y_seen)), ru);
      }
      const auto params = regressors.parameters();
      const auto grads = gradient_values(regressor_objective, params);
      const std::size_t n_s = bsr->r_s.parameters().size();
      rs_opt.step(bsr->r_s.parameters(), std::span(grads).first(n_s));
      if (!bsr->shared) ru_opt.step(bsr->r_u.parameters(), std::span(grads).subspan(n_s));
    }

    generator_opt.step(model.generator.parameters(),
                       gradient_values(generator_objective, graph.generator().parameters()));
    result.log.records.push_back(record);
  }
  model.trained = true;
  return result;
}

}  // namespace bsrgan
