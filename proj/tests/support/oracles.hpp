#pragma once

// Independent re-computations used as test oracles. Nothing here calls the
// library's kernels or tape: every value is produced by plain loops over
// doubles, so agreement with the library is evidence rather than tautology.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "bsrgan/gan.hpp"
#include "bsrgan/matrix.hpp"
#include "bsrgan/nn.hpp"

namespace oracle {

using Vec = std::vector<double>;

/// Smallest |pre-activation| seen at any hidden ReLU, to steer clear of kinks.
struct KinkTracker {
  double min_abs = std::numeric_limits<double>::infinity();
  void see(double v) { min_abs = std::min(min_abs, v < 0 ? -v : v); }
};

Vec row(const bsrgan::Matrix& m, std::size_t r);
Vec concat(const Vec& a, const Vec& b);

/// One row through the network.
Vec mlp(const bsrgan::Mlp& net, const Vec& x, KinkTracker* kinks = nullptr);
/// d net(x) / dx for a network with one output, by hand-written backprop.
Vec mlp_input_gradient(const bsrgan::Mlp& net, const Vec& x);

double log_sum_exp(const Vec& v);

/// Mean softmax NLL of targets (column positions).
double softmax_nll(const bsrgan::Mlp& net, const bsrgan::Matrix& inputs,
                   std::span<const std::size_t> targets, KinkTracker* kinks = nullptr);

/// Mean over rows of the squared L2 residual of net(x) against y.
double reconstruction(const bsrgan::Mlp& net, const bsrgan::Matrix& x, const bsrgan::Matrix& y,
                      KinkTracker* kinks = nullptr);

/// Generator outputs G([z, y]) row by row.
bsrgan::Matrix generate(const bsrgan::GanModel& model, const bsrgan::Matrix& y,
                        const bsrgan::Matrix& z, KinkTracker* kinks = nullptr);

struct CriticTerms {
  double wasserstein = 0.0;  // mean D(fake) - mean D(real)
  double penalty = 0.0;      // mean (||grad_x D(x_mix)|| - 1)^2
  double total = 0.0;
};
CriticTerms critic_loss(const bsrgan::GanModel& model, const bsrgan::Matrix& x_real,
                        const bsrgan::Matrix& y, const bsrgan::Matrix& z, std::span<const double> mix,
                        KinkTracker* kinks = nullptr);

/// -mean D(G) + alpha * NLL of the seen positions under the frozen classifier.
double generator_loss(const bsrgan::GanModel& model, const bsrgan::Matrix& y,
                      std::span<const std::size_t> positions, const bsrgan::Matrix& z,
                      KinkTracker* kinks = nullptr);

/// Central differences of `loss` with respect to every entry of `params`,
/// perturbing them in place (each entry is restored afterwards).
std::vector<bsrgan::Matrix> central_differences(std::span<bsrgan::Matrix> params,
                                                const std::function<double()>& loss,
                                                double step = 1e-5);

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-6);

/// Largest relative error over matching entries.
double max_relative_error(std::span<const bsrgan::Matrix> a, std::span<const bsrgan::Matrix> b,
                          double floor = 1e-6);

/// Tally-based per-class accuracy: returns (class -> percent, unweighted mean).
std::pair<std::vector<std::pair<std::size_t, double>>, double> per_class_tally(
    std::span<const std::size_t> preds, std::span<const std::size_t> truths);

}  // namespace oracle
