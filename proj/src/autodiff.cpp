#include "bsrgan/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "bsrgan/errors.hpp"

namespace bsrgan {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw DimensionError(std::string(op) + " shape mismatch " + a.shape_string() + " vs " +
                       b.shape_string());
}

// True when b is a single row to be broadcast over a's rows; throws when the
// shapes are neither equal nor broadcastable.
bool check_binary(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return false;
  if (b.rows() == 1 && b.cols() == a.cols()) return true;
  shape_error(op, a, b);
}

template <typename F>
Matrix map(const Matrix& x, F f) {
  Matrix out = x;
  for (double& v : out.data()) v = f(v);
  return out;
}

template <typename F>
Matrix zip_rowwise(const Matrix& a, const Matrix& b, bool row_broadcast, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const std::size_t br = row_broadcast ? 0 : r;
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = f(a(r, c), b(br, c));
  }
  return out;
}

class RecordingGuard {
 public:
  RecordingGuard(bool& flag, bool value) : flag_(flag), saved_(flag) { flag_ = value; }
  ~RecordingGuard() { flag_ = saved_; }
  RecordingGuard(const RecordingGuard&) = delete;
  RecordingGuard& operator=(const RecordingGuard&) = delete;

 private:
  bool& flag_;
  bool saved_;
};

}  // namespace

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw ContractError("use of an unbound Var");
  return tape_->node(id_).value;
}

bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

Var Tape::parameter(Matrix value) {
  Node n;
  n.requires_grad = true;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(OpKind op, Matrix value, std::initializer_list<Var> inputs, Node attrs) {
  attrs.op = op;
  attrs.arity = static_cast<std::uint8_t>(inputs.size());
  attrs.requires_grad = false;
  std::size_t i = 0;
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError("operands recorded on different tapes");
    attrs.inputs[i++] = in.id();
    attrs.requires_grad = attrs.requires_grad || in.requires_grad();
  }
  attrs.requires_grad = attrs.requires_grad && recording_;
  attrs.value = std::move(value);
  nodes_.push_back(std::move(attrs));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::vector<Var>& grads, std::vector<bool>& has, std::size_t id, Var g) {
  if (has[id]) {
    grads[id] = add(grads[id], g);
  } else {
    grads[id] = g;
    has[id] = true;
  }
}

std::vector<Var> Tape::gradients(const Var& loss, std::span<const Var> wrt, GradMode mode) {
  if (&loss.tape() != this) throw ContractError("loss recorded on a different tape");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward needs a scalar loss, got " + loss.value().shape_string());
  }
  const std::size_t n = loss.id() + 1;

  // needed[i]: node i lies on a path from some wrt leaf to the loss.
  std::vector<bool> needed(n, false);
  for (const Var& w : wrt) {
    if (&w.tape() != this) throw ContractError("wrt tensor recorded on a different tape");
    if (w.id() < n && nodes_[w.id()].requires_grad) needed[w.id()] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = nodes_[i];
    if (!node.requires_grad || needed[i]) continue;
    for (std::size_t k = 0; k < node.arity; ++k) {
      if (needed[node.inputs[k]]) {
        needed[i] = true;
        break;
      }
    }
  }

  std::vector<Var> grads(n);
  std::vector<bool> has(n, false);
  {
    RecordingGuard guard(recording_, mode == GradMode::create_graph);
    if (needed[loss.id()]) {
      grads[loss.id()] = constant(Matrix::scalar(1.0));
      has[loss.id()] = true;
    }
    for (std::size_t i = n; i-- > 0;) {
      if (!has[i] || !needed[i] || nodes_[i].op == OpKind::leaf) continue;
      backward_node(i, grads[i], grads, has, needed);
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.id() < n && has[w.id()]) {
      out.push_back(grads[w.id()]);
    } else {
      out.push_back(constant(Matrix(w.rows(), w.cols())));
    }
  }
  return out;
}

void Tape::backward_node(std::size_t id, const Var& g, std::vector<Var>& grads,
                         std::vector<bool>& has, const std::vector<bool>& needed) {
  const Node& node = nodes_[id];
  const Var self(this, id);
  const Var a(this, node.inputs[0]);
  const Var b(this, node.inputs[1]);
  const bool want_a = node.arity > 0 && needed[node.inputs[0]];
  const bool want_b = node.arity > 1 && needed[node.inputs[1]];
  auto push_a = [&](Var v) { accumulate(grads, has, a.id(), v); };
  auto push_b = [&](Var v) { accumulate(grads, has, b.id(), v); };

  switch (node.op) {
    case OpKind::leaf:
      break;
    case OpKind::matmul:
      if (want_a) push_a(matmul(g, transpose(b)));
      if (want_b) push_b(matmul(transpose(a), g));
      break;
    case OpKind::transpose:
      if (want_a) push_a(transpose(g));
      break;
    case OpKind::add:
      if (want_a) push_a(g);
      if (want_b) push_b(node.row_broadcast ? sum_rows(g) : g);
      break;
    case OpKind::sub:
      if (want_a) push_a(g);
      if (want_b) push_b(scale(node.row_broadcast ? sum_rows(g) : g, -1.0));
      break;
    case OpKind::mul:
      if (want_a) push_a(mul(g, b));
      if (want_b) push_b(node.row_broadcast ? sum_rows(mul(g, a)) : mul(g, a));
      break;
    case OpKind::scale:
      if (want_a) push_a(scale(g, node.scalar));
      break;
    case OpKind::relu:
      if (want_a) {
        Matrix mask = map(a.value(), [](double v) { return v > 0.0 ? 1.0 : 0.0; });
        push_a(mul(g, constant(std::move(mask))));
      }
      break;
    case OpKind::exp:
      if (want_a) push_a(mul(g, self));
      break;
    case OpKind::sqrt:
      if (want_a) push_a(mul(g, scale(reciprocal(self), 0.5)));
      break;
    case OpKind::reciprocal:
      if (want_a) push_a(mul(g, scale(square(self), -1.0)));
      break;
    case OpKind::square:
      if (want_a) push_a(mul(g, scale(a, 2.0)));
      break;
    case OpKind::sum:
      if (want_a) push_a(broadcast_scalar(g, a.rows(), a.cols()));
      break;
    case OpKind::mean:
      if (want_a) {
        const double inv = 1.0 / static_cast<double>(a.value().size());
        push_a(scale(broadcast_scalar(g, a.rows(), a.cols()), inv));
      }
      break;
    case OpKind::sum_rows:
      if (want_a) push_a(broadcast_rows(g, a.rows()));
      break;
    case OpKind::sum_cols:
      if (want_a) push_a(broadcast_cols(g, a.cols()));
      break;
    case OpKind::broadcast_rows:
      if (want_a) push_a(sum_rows(g));
      break;
    case OpKind::broadcast_cols:
      if (want_a) push_a(sum_cols(g));
      break;
    case OpKind::broadcast_scalar:
      if (want_a) push_a(sum(g));
      break;
    case OpKind::concat_cols:
      if (want_a) push_a(slice_cols(g, 0, a.cols()));
      if (want_b) push_b(slice_cols(g, a.cols(), b.cols()));
      break;
    case OpKind::concat_rows:
      if (want_a) push_a(slice_rows(g, 0, a.rows()));
      if (want_b) push_b(slice_rows(g, a.rows(), b.rows()));
      break;
    case OpKind::slice_cols:
      if (want_a) {
        Node attrs;
        attrs.offset = node.offset;
        attrs.extent = a.cols();
        Matrix padded(g.rows(), a.cols());
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) padded(r, node.offset + c) = g.value()(r, c);
        push_a(record(OpKind::pad_cols, std::move(padded), {g}, attrs));
      }
      break;
    case OpKind::slice_rows:
      if (want_a) {
        Node attrs;
        attrs.offset = node.offset;
        attrs.extent = a.rows();
        Matrix padded(a.rows(), g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) padded(node.offset + r, c) = g.value()(r, c);
        push_a(record(OpKind::pad_rows, std::move(padded), {g}, attrs));
      }
      break;
    case OpKind::pad_cols:
      if (want_a) push_a(slice_cols(g, node.offset, a.cols()));
      break;
    case OpKind::pad_rows:
      if (want_a) push_a(slice_rows(g, node.offset, a.rows()));
      break;
    case OpKind::l2_norm_rows:
      // d||x|| / dx = x / ||x||; taken as 0 for a zero row.
      if (want_a) push_a(mul(broadcast_cols(mul(g, reciprocal(self)), a.cols()), a));
      break;
    case OpKind::log_softmax:
      if (want_a) push_a(sub(g, mul(exp(self), broadcast_cols(sum_cols(g), a.cols()))));
      break;
  }
}

std::vector<Var> backward(const Var& loss, std::span<const Var> wrt, GradMode mode) {
  return loss.tape().gradients(loss, wrt, mode);
}

Var matmul(const Var& a, const Var& b) {
  return a.tape().record(OpKind::matmul, kernels::matmul(a.value(), b.value()), {a, b});
}

Var transpose(const Var& a) {
  const Matrix& v = a.value();
  Matrix out(v.cols(), v.rows());
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < v.cols(); ++c) out(c, r) = v(r, c);
  return a.tape().record(OpKind::transpose, std::move(out), {a});
}

Var add(const Var& a, const Var& b) {
  Tape::Node attrs;
  attrs.row_broadcast = check_binary("add", a.value(), b.value());
  return a.tape().record(OpKind::add, kernels::add_rowwise(a.value(), b.value()), {a, b}, attrs);
}

Var sub(const Var& a, const Var& b) {
  Tape::Node attrs;
  attrs.row_broadcast = check_binary("sub", a.value(), b.value());
  Matrix out = zip_rowwise(a.value(), b.value(), attrs.row_broadcast,
                           [](double x, double y) { return x - y; });
  return a.tape().record(OpKind::sub, std::move(out), {a, b}, attrs);
}

Var mul(const Var& a, const Var& b) {
  Tape::Node attrs;
  attrs.row_broadcast = check_binary("mul", a.value(), b.value());
  Matrix out = zip_rowwise(a.value(), b.value(), attrs.row_broadcast,
                           [](double x, double y) { return x * y; });
  return a.tape().record(OpKind::mul, std::move(out), {a, b}, attrs);
}

Var scale(const Var& a, double factor) {
  Tape::Node attrs;
  attrs.scalar = factor;
  return a.tape().record(OpKind::scale, map(a.value(), [factor](double v) { return v * factor; }),
                         {a}, attrs);
}

Var relu(const Var& x) { return x.tape().record(OpKind::relu, kernels::relu(x.value()), {x}); }

Var exp(const Var& x) {
  return x.tape().record(OpKind::exp, map(x.value(), [](double v) { return std::exp(v); }), {x});
}

Var sqrt(const Var& x) {
  for (double v : x.value().data()) {
    if (v < 0.0) throw DomainError("sqrt of negative value " + std::to_string(v));
  }
  return x.tape().record(OpKind::sqrt, map(x.value(), [](double v) { return std::sqrt(v); }),
                         {x});
}

Var reciprocal(const Var& x) {
  return x.tape().record(OpKind::reciprocal,
                         map(x.value(), [](double v) { return v == 0.0 ? 0.0 : 1.0 / v; }), {x});
}

Var square(const Var& x) {
  return x.tape().record(OpKind::square, map(x.value(), [](double v) { return v * v; }), {x});
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return x.tape().record(OpKind::sum, Matrix::scalar(total), {x});
}

Var mean(const Var& x) {
  if (x.value().empty()) throw DimensionError("mean of an empty tensor");
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return x.tape().record(OpKind::mean,
                         Matrix::scalar(total / static_cast<double>(x.value().size())), {x});
}

Var sum_rows(const Var& x) {
  const Matrix& v = x.value();
  Matrix out(1, v.cols());
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < v.cols(); ++c) out(0, c) += v(r, c);
  return x.tape().record(OpKind::sum_rows, std::move(out), {x});
}

Var sum_cols(const Var& x) {
  const Matrix& v = x.value();
  Matrix out(v.rows(), 1);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    double total = 0.0;
    for (double e : v.row_span(r)) total += e;
    out(r, 0) = total;
  }
  return x.tape().record(OpKind::sum_cols, std::move(out), {x});
}

Var broadcast_rows(const Var& row, std::size_t rows) {
  const Matrix& v = row.value();
  if (v.rows() != 1) throw DimensionError("broadcast_rows needs a row, got " + v.shape_string());
  Matrix out(rows, v.cols());
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(v.data().begin(), v.data().end(), out.row_span(r).begin());
  Tape::Node attrs;
  attrs.extent = rows;
  return row.tape().record(OpKind::broadcast_rows, std::move(out), {row}, attrs);
}

Var broadcast_cols(const Var& col, std::size_t cols) {
  const Matrix& v = col.value();
  if (v.cols() != 1) {
    throw DimensionError("broadcast_cols needs a column, got " + v.shape_string());
  }
  Matrix out(v.rows(), cols);
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = v(r, 0);
  Tape::Node attrs;
  attrs.extent = cols;
  return col.tape().record(OpKind::broadcast_cols, std::move(out), {col}, attrs);
}

Var broadcast_scalar(const Var& s, std::size_t rows, std::size_t cols) {
  return s.tape().record(OpKind::broadcast_scalar, Matrix(rows, cols, s.item()), {s});
}

Var concat_cols(const Var& a, const Var& b) {
  return a.tape().record(OpKind::concat_cols, kernels::concat_cols(a.value(), b.value()), {a, b});
}

Var concat_rows(const Var& a, const Var& b) {
  return a.tape().record(OpKind::concat_rows, kernels::concat_rows(a.value(), b.value()), {a, b});
}

Var slice_cols(const Var& x, std::size_t start, std::size_t count) {
  const Matrix& v = x.value();
  if (start + count > v.cols()) {
    throw DimensionError("slice_cols [" + std::to_string(start) + ", +" + std::to_string(count) +
                         ") out of range for " + v.shape_string());
  }
  Matrix out(v.rows(), count);
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = v(r, start + c);
  Tape::Node attrs;
  attrs.offset = start;
  attrs.extent = count;
  return x.tape().record(OpKind::slice_cols, std::move(out), {x}, attrs);
}

Var slice_rows(const Var& x, std::size_t start, std::size_t count) {
  const Matrix& v = x.value();
  if (start + count > v.rows()) {
    throw DimensionError("slice_rows [" + std::to_string(start) + ", +" + std::to_string(count) +
                         ") out of range for " + v.shape_string());
  }
  std::vector<double> values(v.values().begin() + static_cast<std::ptrdiff_t>(start * v.cols()),
                             v.values().begin() +
                                 static_cast<std::ptrdiff_t>((start + count) * v.cols()));
  Tape::Node attrs;
  attrs.offset = start;
  attrs.extent = count;
  return x.tape().record(OpKind::slice_rows, Matrix(count, v.cols(), std::move(values)), {x},
                         attrs);
}

Var l2_norm_rows(const Var& x) {
  const Matrix& v = x.value();
  Matrix out(v.rows(), 1);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    double total = 0.0;
    for (double e : v.row_span(r)) total += e * e;
    out(r, 0) = std::sqrt(total);
  }
  return x.tape().record(OpKind::l2_norm_rows, std::move(out), {x});
}

Var log_softmax(const Var& logits) {
  if (logits.cols() == 0) throw DimensionError("log_softmax over zero columns");
  return logits.tape().record(OpKind::log_softmax, kernels::log_softmax_rows(logits.value()),
                              {logits});
}

}  // namespace bsrgan
