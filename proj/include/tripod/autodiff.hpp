#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tripod/tensor.hpp"

namespace tripod {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid until the tape is cleared.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool tracked() const;
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Gradients of a scalar loss keyed by tracked-leaf node id.
using GradientMap = std::unordered_map<std::size_t, Tensor>;

/// Append-only record of operations for reverse-mode differentiation.
///
/// Nodes are stored in creation order, so inputs always precede outputs and
/// the backward sweep is a single reverse pass. Values that do not depend on a
/// tracked leaf carry no backward rule and never receive gradients.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);

  /// Records an op output. `backward` is dropped when no input is tracked.
  /// Throws NumericalError when `value` holds NaN or Inf.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool tracked(std::size_t id) const { return nodes_[id].tracked; }

  /// Adds `grad` to the gradient slot of node `id` (no-op for untracked nodes).
  void accumulate(std::size_t id, Tensor grad);

  /// Reverse sweep from a scalar tracked loss; returns gradients for every tracked leaf.
  GradientMap backward(Var loss);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool tracked = false;
    bool leaf = false;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline bool Var::tracked() const { return tape_->tracked(id_); }

// Elementwise arithmetic with numpy-style broadcasting.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
Var shift(const Var& x, double offset);
Var neg(const Var& x);

Var matmul(const Var& a, const Var& b);

Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var relu(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var sqrt(const Var& x);
Var square(const Var& x);
/// log(1 + exp(x)), stable for large |x|.
Var softplus(const Var& x);
/// max(x, floor); gradient passes only where x > floor.
Var clamp_min(const Var& x, double floor);

Var sum(const Var& x);
Var sum(const Var& x, std::size_t axis);
Var mean(const Var& x);
Var mean(const Var& x, std::size_t axis);
/// Variance along `axis` with divisor (n - ddof).
Var variance(const Var& x, std::size_t axis, std::size_t ddof = 1);
Var logsumexp(const Var& x, std::size_t axis);

Var reshape(const Var& x, Shape shape);
Var broadcast_to(const Var& x, Shape shape);
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end);

/// Forward identity, no gradient to `x`.
Var stop_gradient(const Var& x);
/// Forward value `quantized`, backward identity to `continuous`.
Var straight_through(const Var& continuous, const Tensor& quantized);
/// out[i, j] = table[j, indices[i * n_cols + j]] for a (n_cols x n_values) table.
Var gather_columns(const Var& table, std::span<const std::size_t> indices, std::size_t rows);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& x) { return neg(x); }
inline Var operator*(const Var& x, double s) { return scale(x, s); }
inline Var operator*(double s, const Var& x) { return scale(x, s); }
inline Var operator/(const Var& x, double s) { return scale(x, 1.0 / s); }
inline Var operator+(const Var& x, double c) { return shift(x, c); }
inline Var operator+(double c, const Var& x) { return shift(x, c); }
inline Var operator-(const Var& x, double c) { return shift(x, -c); }

}  // namespace tripod
