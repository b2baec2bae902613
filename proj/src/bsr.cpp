#include "bsrgan/bsr.hpp"

#include <cmath>
#include <string>

#include "bsrgan/errors.hpp"

namespace bsrgan {

namespace {

std::vector<std::size_t> regressor_dims(std::size_t d_visual, std::size_t d_attr,
                                        const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> dims{d_visual};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(d_attr);
  return dims;
}

}  // namespace

BsrComponent BsrComponent::create(std::size_t d_visual, std::size_t d_attr,
                                  const std::vector<std::size_t>& hidden, std::uint64_t seed_s,
                                  std::uint64_t seed_u, double gamma, bool shared) {
  check_gamma(gamma);
  BsrComponent c;
  c.r_s = Mlp::create(regressor_dims(d_visual, d_attr, hidden), seed_s);
  if (!shared) c.r_u = Mlp::create(regressor_dims(d_visual, d_attr, hidden), seed_u);
  c.gamma = gamma;
  c.shared = shared;
  return c;
}

double default_gamma(const SplitSpec& split) {
  const auto seen = static_cast<double>(split.seen_classes.size());
  const auto unseen = static_cast<double>(split.unseen_classes.size());
  if (seen + unseen == 0.0) throw ContractError("default_gamma on a split with no classes");
  return seen / (seen + unseen);
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ContractError("gamma must lie in [0, 1], got " + std::to_string(gamma));
  }
}

BsrGraph::BsrGraph(Tape& tape, const BsrComponent& component)
    : r_s_(component.r_s.bind(tape)), shared_(component.shared) {
  if (!shared_) r_u_ = component.r_u.bind(tape);
}

std::vector<Var> BsrGraph::parameters() const {
  std::vector<Var> params(r_s_.parameters().begin(), r_s_.parameters().end());
  if (!shared_) params.insert(params.end(), r_u_.parameters().begin(), r_u_.parameters().end());
  return params;
}

Var reconstruction_loss(const BoundMlp& regressor, const Var& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    throw DimensionError("reconstruction loss: features " + x.value().shape_string() +
                         " vs descriptions " + y.shape_string());
  }
  if (x.rows() == 0) throw DimensionError("reconstruction loss over an empty batch");
  const Var residual = sub(regressor.forward(x), x.tape().constant(y));
  return scale(sum(square(residual)), 1.0 / static_cast<double>(x.rows()));
}

Var loss_rs(const BsrGraph& graph, const Var& x_fake_seen, const Matrix& y_seen) {
  return reconstruction_loss(graph.seen(), x_fake_seen, y_seen);
}

Var loss_ru(const BsrGraph& graph, const Var& x_fake_unseen, const Matrix& y_unseen) {
  return reconstruction_loss(graph.unseen(), x_fake_unseen, y_unseen);
}

Matrix reconstruct(const BsrComponent& component, const Matrix& x) {
  check_gamma(component.gamma);
  const Matrix from_seen = component.seen_regressor().forward(x);
  if (component.shared) return from_seen;
  const Matrix from_unseen = component.unseen_regressor().forward(x);
  Matrix out(from_seen.rows(), from_seen.cols());
  auto dst = out.data();
  auto s = from_seen.data();
  auto u = from_unseen.data();
  // std::lerp is exact at both endpoints, monotone in t and returns a for lerp(a, a, t).
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::lerp(u[i], s[i], component.gamma);
  return out;
}

}  // namespace bsrgan
