#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "bsrgan/checkpoint.hpp"
#include "bsrgan/errors.hpp"
#include "bsrgan/nn.hpp"
#include "oracles.hpp"

using namespace bsrgan;

TEST(Mlp, LayerShapes) {
  const Mlp net = Mlp::create({4, 8, 3}, 1);
  ASSERT_EQ(net.layer_count(), 2u);
  EXPECT_EQ(net.weight(0).rows(), 4u);
  EXPECT_EQ(net.weight(0).cols(), 8u);
  EXPECT_EQ(net.weight(1).rows(), 8u);
  EXPECT_EQ(net.weight(1).cols(), 3u);
}

TEST(Mlp, SameSeedSameBytes) {
  EXPECT_EQ(parameter_bytes(Mlp::create({4, 8, 3}, 5)), parameter_bytes(Mlp::create({4, 8, 3}, 5)));
  EXPECT_NE(parameter_bytes(Mlp::create({4, 8, 3}, 5)), parameter_bytes(Mlp::create({4, 8, 3}, 6)));
}

TEST(Mlp, InitScale) {
  const Mlp net = Mlp::create({64, 64, 2}, 3);
  double sq = 0.0;
  for (double v : net.weight(0).data()) sq += v * v;
  EXPECT_NEAR(std::sqrt(sq / 4096.0), 0.02, 0.002);
  for (double v : net.bias(0).data()) EXPECT_EQ(v, 0.0);
}

TEST(Mlp, ZeroInputGivesFinalBias) {
  const Mlp net = Mlp::create({4, 8, 3}, 1);
  EXPECT_EQ(net.forward(Matrix(2, 4)), Matrix(2, 3));
}

TEST(Mlp, IdentityLayer) {
  const Mlp net = Mlp::from_parameters({3, 3}, {Matrix::identity(3), Matrix(1, 3)});
  const Matrix x = Matrix::from_rows({{1, -2, 3}});
  EXPECT_EQ(net.forward(x), x);
}

TEST(Mlp, BatchEqualsStackedRows) {
  const Mlp net = Mlp::create({3, 6, 2}, 9, 0.5);
  const Matrix a = Matrix::from_rows({{0.1, 0.2, -0.3}});
  const Matrix b = Matrix::from_rows({{-1.0, 0.5, 2.0}});
  EXPECT_EQ(net.forward(kernels::concat_rows(a, b)),
            kernels::concat_rows(net.forward(a), net.forward(b)));
}

TEST(Mlp, MatchesHandRolledArithmetic) {
  const Mlp net = Mlp::create({5, 7, 6, 3}, 21, 0.6);
  const Matrix x = Matrix::from_rows({{0.1, -0.2, 0.3, 0.4, -0.5}, {1, 2, 3, 4, 5}});
  const Matrix y = net.forward(x);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto want = oracle::mlp(net, oracle::row(x, r));
    for (std::size_t c = 0; c < want.size(); ++c) EXPECT_NEAR(y(r, c), want[c], 1e-12);
  }
}

TEST(Mlp, RejectsBadDims) {
  EXPECT_THROW(Mlp::create({4}, 0), ContractError);
  EXPECT_THROW(Mlp::create({4, 0, 2}, 0), ContractError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<Matrix> p{Matrix::row({1.0, -2.0})};
  const std::vector<Matrix> g{Matrix(1, 2)};
  Adam adam(AdamConfig{}, p);
  for (int i = 0; i < 5; ++i) adam.step(p, g);
  EXPECT_EQ(p[0], Matrix::row({1.0, -2.0}));
  EXPECT_EQ(adam.steps(), 5u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<Matrix> p{Matrix::scalar(0.5)};
  Adam adam(AdamConfig{}, p);
  adam.step(p, std::vector<Matrix>{Matrix::scalar(1.0)});
  EXPECT_NEAR(p[0].item(), 0.5 - 0.001 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, QuadraticMatchesScalarRecurrence) {
  // lr 0.1: at the default 1e-3, 100 steps cannot travel the distance 3.
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  std::vector<Matrix> p{Matrix::scalar(0.0)};
  Adam adam(cfg, p);
  double w = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 100; ++t) {
    adam.step(p, std::vector<Matrix>{Matrix::scalar(2.0 * (p[0].item() - 3.0))});
    const double g = 2.0 * (w - 3.0);
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    const double mh = m / (1 - std::pow(cfg.beta1, t));
    const double vh = v / (1 - std::pow(cfg.beta2, t));
    w -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
  }
  EXPECT_NEAR(p[0].item(), w, 1e-9);
  EXPECT_NEAR(p[0].item(), 3.0, 0.5);
}

TEST(SoftmaxNll, UniformLogitsGiveLogK) {
  Tape tape;
  const std::vector<std::size_t> t{0, 3, 1};
  EXPECT_NEAR(softmax_nll(tape.constant(Matrix(3, 5, 0.7)), t).item(), std::log(5.0), 1e-14);
}

TEST(Checkpoint, RoundTripAndMissingFile) {
  const auto dir = std::filesystem::temp_directory_path() / "bsrgan_nn_unit";
  std::filesystem::create_directories(dir);
  const Mlp net = Mlp::create({3, 4, 2}, 8, 0.3);
  save_mlp(net, dir / "net", {{"role", "test"}});
  const LoadedMlp loaded = load_mlp(dir / "net");
  EXPECT_EQ(parameter_bytes(loaded.mlp), parameter_bytes(net));
  EXPECT_EQ(loaded.hyperparameters.at("role"), "test");
  EXPECT_THROW(load_mlp(dir / "absent"), FormatError);
  std::filesystem::remove_all(dir);
}
