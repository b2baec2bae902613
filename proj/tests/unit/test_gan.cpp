#include <gtest/gtest.h>

#include <cmath>

#include "bsrgan/checkpoint.hpp"
#include "bsrgan/errors.hpp"
#include "bsrgan/gan.hpp"
#include "oracles.hpp"

using namespace bsrgan;

namespace {

// Linear critic with the given weight column and bias.
Mlp linear_critic(const std::vector<double>& w, double b) {
  return Mlp::from_parameters({w.size(), 1}, {Matrix(w.size(), 1, w), Matrix::scalar(b)});
}

GanModel small_model(std::size_t d_visual, std::size_t d_attr) {
  TrainConfig cfg;
  cfg.generator_hidden = {5};
  cfg.critic_hidden = {5};
  cfg.seed = 3;
  cfg.alpha = 0.0;
  return GanModel::create(d_visual, d_attr, cfg, std::nullopt);
}

double critic_total(const GanModel& m, const Matrix& x, const Matrix& y, const Matrix& z) {
  Tape tape;
  const GanGraph g(tape, m);
  const std::vector<double> mix(x.rows(), 0.3);
  return critic_loss(g, x, y, z, mix).total.item();
}

LabeledData two_blob_data(std::size_t per_class, double sep) {
  LabeledData d;
  SeedStream rng(17);
  d.dataset.features = Matrix(2 * per_class, 2);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const std::size_t k = i / per_class;
    d.dataset.labels.push_back(k);
    d.dataset.features(i, 0) = (k == 0 ? sep : -sep) + 0.3 * rng.normal();
    d.dataset.features(i, 1) = 0.3 * rng.normal();
  }
  d.dataset.attributes = Matrix::from_rows({{1, 0}, {0, 1}});
  return d;
}

}  // namespace

TEST(Noise, MomentsAndDeterminism) {
  SeedStream a(5);
  const Matrix z = sample_noise(1000, 16, a);
  for (std::size_t c = 0; c < 16; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < 1000; ++r) mean += z(r, c);
    mean /= 1000.0;
    for (std::size_t r = 0; r < 1000; ++r) sq += (z(r, c) - mean) * (z(r, c) - mean);
    EXPECT_NEAR(mean, 0.0, 0.1);
    EXPECT_NEAR(sq / 1000.0, 1.0, 0.15);
  }
  SeedStream b(5);
  EXPECT_EQ(sample_noise(1000, 16, b), z);
  EXPECT_THROW(sample_noise(0, 4, b), ContractError);
}

TEST(Generate, ShapeDeterminismAndNoiseDependence) {
  GanModel m = small_model(3, 4);
  m.generator = Mlp::create({8, 5, 3}, 4, 0.5);
  const Matrix y = Matrix::from_rows({{1, 0, 1, 0}, {1, 0, 1, 0}});
  SeedStream rng(1);
  const Matrix z = sample_noise(2, 4, rng);
  const Matrix x = generate(m, y, z);
  EXPECT_EQ(x.rows(), 2u);
  EXPECT_EQ(x.cols(), 3u);
  EXPECT_EQ(generate(m, y, z), x);
  EXPECT_NE(x.gather_rows(std::vector<std::size_t>{0}), x.gather_rows(std::vector<std::size_t>{1}));
}

TEST(GradientPenalty, UnitLinearCriticIsZero) {
  GanModel m = small_model(2, 2);
  m.critic = linear_critic({0.6, 0.8}, 0.4);
  Tape tape;
  const GanGraph g(tape, m);
  const Matrix a = Matrix::from_rows({{1, 2}, {-1, 0.5}});
  const Matrix b = Matrix::from_rows({{0, 0}, {3, 1}});
  EXPECT_NEAR(gradient_penalty(g, a, b, Matrix(2, 2), std::vector<double>{0.2, 0.9}).item(), 0.0,
              1e-15);
}

TEST(GradientPenalty, SlopeTwoGivesOne) {
  GanModel m = small_model(1, 1);
  m.critic = linear_critic({2.0}, 0.0);
  Tape tape;
  const GanGraph g(tape, m);
  const Matrix a = Matrix::from_rows({{1}, {-3}});
  EXPECT_DOUBLE_EQ(gradient_penalty(g, a, a, Matrix(2, 1), std::vector<double>{0.5, 0.5}).item(), 1.0);
}

TEST(GradientPenalty, HiddenCriticGradientMatchesFiniteDifferences) {
  GanModel m = small_model(3, 2);
  m.critic = Mlp::create({3, 6, 1}, 8, 0.8);
  const Matrix real = Matrix::from_rows({{0.5, -1, 2}, {1, 1, -0.5}});
  const Matrix fake = Matrix::from_rows({{-0.2, 0.3, 0.1}, {0.9, -1.4, 0.6}});
  const std::vector<double> mix{0.3, 0.7};
  Tape tape;
  const GanGraph g(tape, m);
  const Var gp = gradient_penalty(g, real, fake, Matrix(2, 2), mix);
  const auto analytic = gradient_values(gp, g.critic().parameters());
  const auto numeric = oracle::central_differences(m.critic.parameters(), [&] {
    Tape t;
    return gradient_penalty(GanGraph(t, m), real, fake, Matrix(2, 2), mix).item();
  });
  EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-3);
}

TEST(CriticLoss, ZeroCriticCostsBeta) {
  GanModel m = small_model(3, 2);
  m.critic = linear_critic({0, 0, 0}, 0.0);
  m.beta = 7.0;
  EXPECT_DOUBLE_EQ(critic_total(m, Matrix(2, 3, 1.0), Matrix(2, 2, 1.0), Matrix(2, 2, 0.5)), 7.0);
}

TEST(CriticLoss, ConstantCriticWithoutPenaltyIsZero) {
  GanModel m = small_model(3, 2);
  m.critic = linear_critic({0, 0, 0}, 2.5);
  m.beta = 0.0;
  EXPECT_EQ(critic_total(m, Matrix(2, 3, 1.0), Matrix(2, 2, 1.0), Matrix(2, 2, 0.5)), 0.0);
}

TEST(GeneratorLoss, ConstantCriticAlphaZero) {
  GanModel m = small_model(3, 2);
  m.critic = linear_critic({0, 0, 0}, 1.75);
  m.alpha = 0.0;
  Tape tape;
  const std::vector<std::size_t> pos{0, 0};
  EXPECT_EQ(generator_loss(GanGraph(tape, m), Matrix(2, 2, 1.0), pos, Matrix(2, 2)).item(), -1.75);
}

TEST(GeneratorLoss, UniformClassifierGivesLogK) {
  GanModel m = small_model(3, 2);
  m.critic = linear_critic({0, 0, 0}, 0.0);
  m.alpha = 1.0;
  m.seen_classifier = Mlp::from_parameters({3, 4}, {Matrix(3, 4), Matrix(1, 4)});
  Tape tape;
  const std::vector<std::size_t> pos{0, 3};
  EXPECT_NEAR(generator_loss(GanGraph(tape, m), Matrix(2, 2, 1.0), pos, Matrix(2, 2)).item(),
              std::log(4.0), 1e-15);
}

TEST(SeenClassifier, SeparableToySet) {
  LabeledData d = two_blob_data(50, 2.0);
  d.dataset.attributes = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  d.split.seen_classes = {0, 1};
  d.split.unseen_classes = {2};
  for (std::size_t i = 0; i < 100; ++i) d.split.train_idx.push_back(i);
  // Perceptron first, so a failure below is the trainer's fault.
  double w0 = 0, w1 = 0, b = 0;
  for (int epoch = 0; epoch < 100; ++epoch) {
    for (std::size_t i = 0; i < 100; ++i) {
      const double t = d.dataset.labels[i] == 0 ? 1.0 : -1.0;
      if (t * (w0 * d.dataset.features(i, 0) + w1 * d.dataset.features(i, 1) + b) <= 0) {
        w0 += t * d.dataset.features(i, 0);
        w1 += t * d.dataset.features(i, 1);
        b += t;
      }
    }
  }
  std::size_t separated = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const double t = d.dataset.labels[i] == 0 ? 1.0 : -1.0;
    separated += t * (w0 * d.dataset.features(i, 0) + w1 * d.dataset.features(i, 1) + b) > 0;
  }
  ASSERT_EQ(separated, 100u);

  ClassifierConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  const Mlp net = pretrain_seen_classifier(d.dataset, d.split, cfg);
  const auto pred = argmax_rows(net.forward(d.dataset.features));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < 100; ++i) hits += pred[i] == d.dataset.labels[i];
  EXPECT_GE(hits, 99u);
  EXPECT_EQ(parameter_bytes(pretrain_seen_classifier(d.dataset, d.split, cfg)),
            parameter_bytes(net));
}

TEST(SeenClassifier, NeedsTwoSeenClasses) {
  LabeledData d = two_blob_data(5, 2.0);
  d.split.seen_classes = {0};
  d.split.unseen_classes = {1};
  d.split.train_idx = {0, 1, 2};
  EXPECT_THROW(pretrain_seen_classifier(d.dataset, d.split, ClassifierConfig{}), ContractError);
}

TEST(TrainGan, ZeroEpochsIsANoOp) {
  const LabeledData d = make_synthetic(SyntheticSpec{.n_classes = 4, .n_seen = 2, .d_visual = 3,
                                                     .d_attr = 3, .samples_per_class = 10,
                                                     .cluster_std = 0.3, .seed = 1});
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.alpha = 0.0;
  const GanTrainResult r = train_gan(d.dataset, d.split, cfg, nullptr, nullptr,
                                     ReconstructionUse::none);
  EXPECT_TRUE(r.log.records.empty());
  EXPECT_FALSE(r.model.trained);
  EXPECT_EQ(r.model.generator, GanModel::create(3, 3, cfg, std::nullopt).generator);
}

TEST(TrainGan, SameSeedSameLog) {
  const LabeledData d = make_synthetic(SyntheticSpec{.n_classes = 4, .n_seen = 2, .d_visual = 3,
                                                     .d_attr = 3, .samples_per_class = 10,
                                                     .cluster_std = 0.3, .seed = 1});
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.alpha = 0.0;
  auto run = [&] {
    return train_gan(d.dataset, d.split, cfg, nullptr, nullptr, ReconstructionUse::none).log.to_jsonl();
  };
  const std::string log = run();
  EXPECT_EQ(run(), log);
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 12);  // 3 epochs x 16 train rows / 4
}

TEST(TrainGan, RejectsBadConfig) {
  TrainConfig cfg;
  cfg.n_critic = 0;
  EXPECT_THROW(validate(cfg), ContractError);
  cfg = TrainConfig{};
  cfg.beta = 0.0;
  EXPECT_THROW(validate(cfg), ContractError);
  cfg = TrainConfig{};
  cfg.alpha = -1.0;
  EXPECT_THROW(validate(cfg), ContractError);
}

TEST(TrainGan, SingleClassMeanIsMatched) {
  LabeledData d = two_blob_data(64, 1.5);
  d.split.seen_classes = {0};
  d.split.unseen_classes = {1};
  for (std::size_t i = 0; i < 64; ++i) d.split.train_idx.push_back(i);
  double real0 = 0, real1 = 0;
  for (std::size_t i : d.split.train_idx) {
    real0 += d.dataset.features(i, 0) / 64.0;
    real1 += d.dataset.features(i, 1) / 64.0;
  }
  TrainConfig cfg;
  cfg.alpha = 0.0;
  cfg.epochs = 2000;  // one generator step per epoch at batch 64
  cfg.batch_size = 64;
  cfg.n_critic = 5;
  cfg.gan_adam.learning_rate = 1e-3;
  cfg.generator_hidden = {16};
  cfg.critic_hidden = {16};
  const GanTrainResult r = train_gan(d.dataset, d.split, cfg, nullptr, nullptr,
                                     ReconstructionUse::none);
  ASSERT_EQ(r.log.records.size(), 2000u);
  SeedStream rng(99);
  Matrix y(1000, 2, 0.0);
  for (std::size_t i = 0; i < 1000; ++i) y(i, 0) = 1.0;
  const Matrix x = generate(r.model, y, sample_noise(1000, r.model.noise_dim, rng));
  double g0 = 0, g1 = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    g0 += x(i, 0) / 1000.0;
    g1 += x(i, 1) / 1000.0;
  }
  EXPECT_NEAR(g0, real0, 0.5);
  EXPECT_NEAR(g1, real1, 0.5);
}
