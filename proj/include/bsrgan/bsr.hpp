#pragma once

// Bi-semantic reconstruction: two regressors map visual features back to class
// descriptions, one fitted on features synthesized for seen classes (R_s) and
// one on features synthesized for unseen classes (R_u). Their outputs are
// blended into a reconstructed description at recognition time.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bsrgan/autodiff.hpp"
#include "bsrgan/data.hpp"
#include "bsrgan/nn.hpp"

namespace bsrgan {

struct BsrComponent {
  Mlp r_s;
  Mlp r_u;            // unused when `shared`
  double gamma = 0.5;  // weight of R_s in the blend, in [0, 1]
  bool shared = false;  // one regressor serves both roles (single-regressor ablation)

  static BsrComponent create(std::size_t d_visual, std::size_t d_attr,
                             const std::vector<std::size_t>& hidden, std::uint64_t seed_s,
                             std::uint64_t seed_u, double gamma, bool shared = false);

  const Mlp& seen_regressor() const noexcept { return r_s; }
  const Mlp& unseen_regressor() const noexcept { return shared ? r_s : r_u; }
};

/// Seen-class share of all classes: |C_s| / (|C_s| + |C_u|).
double default_gamma(const SplitSpec& split);

/// Throws ContractError unless 0 <= gamma <= 1.
void check_gamma(double gamma);

/// Both regressors bound on one tape. For a shared component the two bindings
/// are the same Vars, so gradients from both losses accumulate into one set.
class BsrGraph {
 public:
  BsrGraph(Tape& tape, const BsrComponent& component);

  const BoundMlp& seen() const noexcept { return r_s_; }
  const BoundMlp& unseen() const noexcept { return shared_ ? r_s_ : r_u_; }
  /// Every trainable regressor parameter, without duplicates.
  std::vector<Var> parameters() const;

 private:
  BoundMlp r_s_;
  BoundMlp r_u_;
  bool shared_ = false;
};

/// Mean over rows of ||R(x) - y||^2 (summed over attribute dims).
Var reconstruction_loss(const BoundMlp& regressor, const Var& x, const Matrix& y);

/// Seen reconstruction loss: R_s on features synthesized from seen descriptions.
Var loss_rs(const BsrGraph& graph, const Var& x_fake_seen, const Matrix& y_seen);
/// Unseen reconstruction loss: R_u on features synthesized from unseen descriptions.
Var loss_ru(const BsrGraph& graph, const Var& x_fake_unseen, const Matrix& y_unseen);

/// gamma * R_s(x) + (1 - gamma) * R_u(x), rowwise. Exact at gamma = 0 and 1,
/// and exactly R(x) whenever both regressors agree.
Matrix reconstruct(const BsrComponent& component, const Matrix& x);

}  // namespace bsrgan
