#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every operation applied to its Vars in creation order, which
// is a valid topological order. Gradients are themselves computed with taped
// operations, so with GradMode::create_graph the returned gradients can be
// differentiated again (used by the critic's gradient penalty).
//
// Broadcasting is limited to a single row (1 x n) against every row of an
// m x n matrix, as the second operand of add/sub/mul. Everything else needs
// matching shapes.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "bsrgan/matrix.hpp"

namespace bsrgan {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double item() const { return value().item(); }
  bool requires_grad() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class GradMode : std::uint8_t {
  values_only,   // gradients are constants; cheapest
  create_graph,  // gradients stay on the tape and can be differentiated again
};

enum class OpKind : std::uint8_t {
  leaf,
  matmul,
  transpose,
  add,
  sub,
  mul,
  scale,
  relu,
  exp,
  sqrt,
  reciprocal,
  square,
  sum,
  mean,
  sum_rows,
  sum_cols,
  broadcast_rows,
  broadcast_cols,
  broadcast_scalar,
  concat_cols,
  concat_rows,
  slice_cols,
  slice_rows,
  pad_cols,
  pad_rows,
  l2_norm_rows,
  log_softmax,
};

// One recorded operation and its output value.
struct TapeNode {
  OpKind op = OpKind::leaf;
  std::size_t inputs[2] = {0, 0};
  std::uint8_t arity = 0;
  bool requires_grad = false;
  bool row_broadcast = false;  // second operand of add/sub/mul is a broadcast row
  double scalar = 0.0;         // scale factor
  std::size_t offset = 0;      // slice/pad start
  std::size_t extent = 0;      // slice count, pad total, broadcast size
  Matrix value;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable leaf: gradients flow into it.
  Var parameter(Matrix value);
  /// Non-differentiable leaf.
  Var constant(Matrix value);

  /// d loss / d w for every w in `wrt`. `loss` must be 1x1. A w that does not
  /// influence the loss gets an exactly-zero gradient.
  std::vector<Var> gradients(const Var& loss, std::span<const Var> wrt,
                             GradMode mode = GradMode::values_only);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool recording() const noexcept { return recording_; }

  // Used by the op functions below; not meant for direct use.
  using Node = TapeNode;
  const Node& node(std::size_t id) const { return nodes_[id]; }
  Var record(OpKind op, Matrix value, std::initializer_list<Var> inputs, Node attrs = {});

 private:
  void accumulate(std::vector<Var>& grads, std::vector<bool>& has, std::size_t id, Var g);
  void backward_node(std::size_t id, const Var& g, std::vector<Var>& grads,
                     std::vector<bool>& has, const std::vector<bool>& needed);

  std::deque<Node> nodes_;  // deque: references to values stay valid as the tape grows
  bool recording_ = true;
};

/// Convenience wrapper over Tape::gradients.
std::vector<Var> backward(const Var& loss, std::span<const Var> wrt,
                          GradMode mode = GradMode::values_only);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var relu(const Var& x);
Var exp(const Var& x);
Var sqrt(const Var& x);
/// Elementwise 1/x, with 1/0 defined as 0.
Var reciprocal(const Var& x);
Var square(const Var& x);
Var sum(const Var& x);
Var mean(const Var& x);
/// Column sums: m x n -> 1 x n.
Var sum_rows(const Var& x);
/// Row sums: m x n -> m x 1.
Var sum_cols(const Var& x);
Var broadcast_rows(const Var& row, std::size_t rows);
Var broadcast_cols(const Var& col, std::size_t cols);
Var broadcast_scalar(const Var& s, std::size_t rows, std::size_t cols);
/// Joins each row of a with the matching row of b: m x p, m x q -> m x (p+q).
Var concat_cols(const Var& a, const Var& b);
/// Stacks b below a: m x n, k x n -> (m+k) x n.
Var concat_rows(const Var& a, const Var& b);
Var slice_cols(const Var& x, std::size_t start, std::size_t count);
Var slice_rows(const Var& x, std::size_t start, std::size_t count);
/// Euclidean norm of each row: m x n -> m x 1.
Var l2_norm_rows(const Var& x);
/// Rowwise log-softmax.
Var log_softmax(const Var& logits);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

}  // namespace bsrgan
