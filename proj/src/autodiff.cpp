#include "tripod/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "broadcast.hpp"
#include "tripod/error.hpp"

namespace tripod {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

Tape& common_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw Error("operands recorded on different tapes");
  return a.tape();
}

template <class F>
Tensor broadcast_binary(const Tensor& a, const Tensor& b, F f) {
  if (a.shape() == b.shape()) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  const Shape shape = broadcast_shapes(a.shape(), b.shape());
  Tensor out(shape);
  if (b.size() == 1 && a.shape() == shape) {
    const double bv = b[0];
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], bv);
    return out;
  }
  const auto sa = detail::broadcast_strides(a.shape(), shape);
  const auto sb = detail::broadcast_strides(b.shape(), shape);
  auto pa = a.data();
  auto pb = b.data();
  auto po = out.data();
  detail::for_each_broadcast(shape, sa, sb, [&](std::size_t io, std::size_t ia, std::size_t ib) {
    po[io] = f(pa[ia], pb[ib]);
  });
  return out;
}

template <class F>
Var unary(std::string_view name, const Var& x, F f, std::function<Tensor(const Tensor& x, const Tensor& y, const Tensor& g)> grad) {
  const Tensor& xv = x.value();
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
  const std::size_t xid = x.id();
  Var inputs[] = {x};
  Tape& tape = x.tape();
  const std::size_t yid = tape.size();
  return tape.record(name, std::move(y), inputs,
                     [xid, yid, grad](Tape& t, const Tensor& g) {
                       t.accumulate(xid, grad(t.value(xid), t.value(yid), g));
                     });
}

template <class F>
Tensor map2(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

std::size_t check_axis(const Var& x, std::size_t axis, std::string_view op) {
  if (axis >= x.shape().size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                     to_string(x.shape()));
  }
  return axis;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out = s;
  out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericalError("constant holds non-finite values");
  nodes_.push_back(Node{std::move(value), Tensor{}, false, false, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  if (!value.all_finite()) throw NumericalError("variable holds non-finite values");
  nodes_.push_back(Node{std::move(value), Tensor{}, false, true, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericalError(std::string(op) + " produced a non-finite value");
  }
  bool tracked = false;
  for (const Var& in : inputs) tracked = tracked || in.tracked();
  Node node{std::move(value), Tensor{}, false, tracked, false, {}};
  if (tracked) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, Tensor grad) {
  Node& node = nodes_[id];
  if (!node.tracked) return;
  if (grad.shape() != node.value.shape()) {
    throw ShapeError("gradient shape " + to_string(grad.shape()) + " does not match value shape " +
                     to_string(node.value.shape()));
  }
  if (!node.has_grad) {
    node.grad = std::move(grad);
    node.has_grad = true;
  } else {
    node.grad += grad;
  }
}

GradientMap Tape::backward(Var loss) {
  if (&loss.tape() != this) throw Error("loss recorded on a different tape");
  if (!loss.tracked()) throw DomainError("backward: loss does not depend on any tracked variable");
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + to_string(loss.shape()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor{};
  }
  accumulate(loss.id(), Tensor(loss.shape(), 1.0));
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.has_grad || !node.backward) continue;
    node.backward(*this, node.grad);
  }
  GradientMap grads;
  for (std::size_t id = 0; id <= loss.id(); ++id) {
    Node& node = nodes_[id];
    if (node.leaf && node.tracked) {
      grads.emplace(id, node.has_grad ? node.grad : Tensor(node.value.shape(), 0.0));
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Elementwise binary

Var add(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b);
  Tensor y = broadcast_binary(a.value(), b.value(), [](double x, double z) { return x + z; });
  const std::size_t ia = a.id(), ib = b.id();
  Var in[] = {a, b};
  return tape.record("add", std::move(y), in, [ia, ib](Tape& t, const Tensor& g) {
    if (t.tracked(ia)) t.accumulate(ia, reduce_to_shape(g, t.value(ia).shape()));
    if (t.tracked(ib)) t.accumulate(ib, reduce_to_shape(g, t.value(ib).shape()));
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b);
  Tensor y = broadcast_binary(a.value(), b.value(), [](double x, double z) { return x - z; });
  const std::size_t ia = a.id(), ib = b.id();
  Var in[] = {a, b};
  return tape.record("sub", std::move(y), in, [ia, ib](Tape& t, const Tensor& g) {
    if (t.tracked(ia)) t.accumulate(ia, reduce_to_shape(g, t.value(ia).shape()));
    if (t.tracked(ib)) {
      Tensor gb = reduce_to_shape(g, t.value(ib).shape());
      gb *= -1.0;
      t.accumulate(ib, std::move(gb));
    }
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b);
  Tensor y = broadcast_binary(a.value(), b.value(), [](double x, double z) { return x * z; });
  const std::size_t ia = a.id(), ib = b.id();
  Var in[] = {a, b};
  return tape.record("mul", std::move(y), in, [ia, ib](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    if (t.tracked(ia)) {
      Tensor ga = broadcast_binary(g, bv, [](double x, double z) { return x * z; });
      t.accumulate(ia, reduce_to_shape(ga, av.shape()));
    }
    if (t.tracked(ib)) {
      Tensor gb = broadcast_binary(g, av, [](double x, double z) { return x * z; });
      t.accumulate(ib, reduce_to_shape(gb, bv.shape()));
    }
  });
}

Var div(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b);
  for (double v : b.value().data()) {
    if (v == 0.0) throw DomainError("div: division by zero");
  }
  Tensor y = broadcast_binary(a.value(), b.value(), [](double x, double z) { return x / z; });
  const std::size_t ia = a.id(), ib = b.id();
  const std::size_t iy = tape.size();
  Var in[] = {a, b};
  return tape.record("div", std::move(y), in, [ia, ib, iy](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    Tensor gb_full = broadcast_binary(g, bv, [](double x, double z) { return x / z; });
    if (t.tracked(ia)) t.accumulate(ia, reduce_to_shape(gb_full, av.shape()));
    if (t.tracked(ib)) {
      // d(a/b)/db = -y / b
      const Tensor& yv = t.value(iy);
      Tensor gb(yv.shape());
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = -gb_full[i] * yv[i];
      t.accumulate(ib, reduce_to_shape(gb, bv.shape()));
    }
  });
}

Var scale(const Var& x, double factor) {
  return unary(
      "scale", x, [factor](double v) { return v * factor; },
      [factor](const Tensor&, const Tensor&, const Tensor& g) {
        Tensor out = g;
        out *= factor;
        return out;
      });
}

Var shift(const Var& x, double offset) {
  return unary(
      "shift", x, [offset](double v) { return v + offset; },
      [](const Tensor&, const Tensor&, const Tensor& g) { return g; });
}

Var neg(const Var& x) { return scale(x, -1.0); }

Var matmul(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    throw ShapeError("matmul: incompatible shapes " + to_string(sa) + " and " + to_string(sb));
  }
  const auto m = static_cast<Eigen::Index>(sa[0]);
  const auto k = static_cast<Eigen::Index>(sa[1]);
  const auto n = static_cast<Eigen::Index>(sb[1]);
  Tensor y(Shape{sa[0], sb[1]});
  MatrixMap(y.data().data(), m, n).noalias() =
      ConstMatrixMap(a.value().data().data(), m, k) * ConstMatrixMap(b.value().data().data(), k, n);
  const std::size_t ia = a.id(), ib = b.id();
  Var in[] = {a, b};
  return tape.record("matmul", std::move(y), in, [ia, ib, m, k, n](Tape& t, const Tensor& g) {
    ConstMatrixMap gm(g.data().data(), m, n);
    if (t.tracked(ia)) {
      Tensor ga(t.value(ia).shape());
      MatrixMap(ga.data().data(), m, k).noalias() =
          gm * ConstMatrixMap(t.value(ib).data().data(), k, n).transpose();
      t.accumulate(ia, std::move(ga));
    }
    if (t.tracked(ib)) {
      Tensor gb(t.value(ib).shape());
      MatrixMap(gb.data().data(), k, n).noalias() =
          ConstMatrixMap(t.value(ia).data().data(), m, k).transpose() * gm;
      t.accumulate(ib, std::move(gb));
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise unary

Var tanh(const Var& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](const Tensor&, const Tensor& y, const Tensor& g) {
        return map2(g, y, [](double gi, double yi) { return gi * (1.0 - yi * yi); });
      });
}

Var sigmoid(const Var& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](const Tensor&, const Tensor& y, const Tensor& g) {
        return map2(g, y, [](double gi, double yi) { return gi * yi * (1.0 - yi); });
      });
}

Var relu(const Var& x) {
  return unary(
      "relu", x, [](double v) { return v > 0 ? v : 0.0; },
      [](const Tensor& xv, const Tensor&, const Tensor& g) {
        return map2(g, xv, [](double gi, double xi) { return xi > 0 ? gi : 0.0; });
      });
}

Var exp(const Var& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); },
      [](const Tensor&, const Tensor& y, const Tensor& g) {
        return map2(g, y, [](double gi, double yi) { return gi * yi; });
      });
}

Var log(const Var& x) {
  for (double v : x.value().data()) {
    if (!(v > 0.0)) throw DomainError("log of a nonpositive value");
  }
  return unary(
      "log", x, [](double v) { return std::log(v); },
      [](const Tensor& xv, const Tensor&, const Tensor& g) {
        return map2(g, xv, [](double gi, double xi) { return gi / xi; });
      });
}

Var sqrt(const Var& x) {
  for (double v : x.value().data()) {
    if (v < 0.0) throw DomainError("sqrt of a negative value");
  }
  return unary(
      "sqrt", x, [](double v) { return std::sqrt(v); },
      [](const Tensor&, const Tensor& y, const Tensor& g) {
        return map2(g, y, [](double gi, double yi) { return gi * 0.5 / yi; });
      });
}

Var square(const Var& x) {
  return unary(
      "square", x, [](double v) { return v * v; },
      [](const Tensor& xv, const Tensor&, const Tensor& g) {
        return map2(g, xv, [](double gi, double xi) { return 2.0 * gi * xi; });
      });
}

Var softplus(const Var& x) {
  return unary(
      "softplus", x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](const Tensor& xv, const Tensor&, const Tensor& g) {
        return map2(g, xv, [](double gi, double xi) {
          const double s = xi >= 0 ? 1.0 / (1.0 + std::exp(-xi)) : std::exp(xi) / (1.0 + std::exp(xi));
          return gi * s;
        });
      });
}

Var clamp_min(const Var& x, double floor) {
  return unary(
      "clamp_min", x, [floor](double v) { return v > floor ? v : floor; },
      [floor](const Tensor& xv, const Tensor&, const Tensor& g) {
        return map2(g, xv, [floor](double gi, double xi) { return xi > floor ? gi : 0.0; });
      });
}

// ---------------------------------------------------------------------------
// Reductions

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const std::size_t ix = x.id();
  Var in[] = {x};
  return x.tape().record("sum", Tensor::scalar(total), in, [ix](Tape& t, const Tensor& g) {
    t.accumulate(ix, Tensor(t.value(ix).shape(), g[0]));
  });
}

Var sum(const Var& x, std::size_t axis) {
  check_axis(x, axis, "sum");
  const auto v = detail::axis_view(x.shape(), axis);
  const Tensor& xv = x.value();
  Tensor y(drop_axis(x.shape(), axis), 0.0);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t a = 0; a < v.length; ++a)
      for (std::size_t i = 0; i < v.inner; ++i) y[o * v.inner + i] += xv[(o * v.length + a) * v.inner + i];
  const std::size_t ix = x.id();
  Var in[] = {x};
  return x.tape().record("sum_axis", std::move(y), in, [ix, v](Tape& t, const Tensor& g) {
    Tensor gx(t.value(ix).shape());
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t a = 0; a < v.length; ++a)
        for (std::size_t i = 0; i < v.inner; ++i) gx[(o * v.length + a) * v.inner + i] = g[o * v.inner + i];
    t.accumulate(ix, std::move(gx));
  });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var mean(const Var& x, std::size_t axis) {
  check_axis(x, axis, "mean");
  return scale(sum(x, axis), 1.0 / static_cast<double>(x.shape()[axis]));
}

Var variance(const Var& x, std::size_t axis, std::size_t ddof) {
  check_axis(x, axis, "variance");
  const auto v = detail::axis_view(x.shape(), axis);
  if (v.length <= ddof) {
    throw DomainError("variance: need more than " + std::to_string(ddof) + " samples along axis");
  }
  const double divisor = static_cast<double>(v.length - ddof);
  const Tensor& xv = x.value();
  Tensor means(drop_axis(x.shape(), axis), 0.0);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t a = 0; a < v.length; ++a)
      for (std::size_t i = 0; i < v.inner; ++i) means[o * v.inner + i] += xv[(o * v.length + a) * v.inner + i];
  means *= 1.0 / static_cast<double>(v.length);
  Tensor y(means.shape(), 0.0);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t a = 0; a < v.length; ++a)
      for (std::size_t i = 0; i < v.inner; ++i) {
        const double d = xv[(o * v.length + a) * v.inner + i] - means[o * v.inner + i];
        y[o * v.inner + i] += d * d;
      }
  y *= 1.0 / divisor;
  const std::size_t ix = x.id();
  Var in[] = {x};
  return x.tape().record("variance", std::move(y), in,
                         [ix, v, divisor, means = std::move(means)](Tape& t, const Tensor& g) {
                           const Tensor& xv = t.value(ix);
                           Tensor gx(xv.shape());
                           for (std::size_t o = 0; o < v.outer; ++o)
                             for (std::size_t a = 0; a < v.length; ++a)
                               for (std::size_t i = 0; i < v.inner; ++i) {
                                 const std::size_t k = (o * v.length + a) * v.inner + i;
                                 gx[k] = 2.0 * (xv[k] - means[o * v.inner + i]) / divisor * g[o * v.inner + i];
                               }
                           t.accumulate(ix, std::move(gx));
                         });
}

Var logsumexp(const Var& x, std::size_t axis) {
  check_axis(x, axis, "logsumexp");
  const auto v = detail::axis_view(x.shape(), axis);
  if (v.length == 0) throw DomainError("logsumexp over an empty axis");
  const Tensor& xv = x.value();
  Tensor y(drop_axis(x.shape(), axis));
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t i = 0; i < v.inner; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < v.length; ++a) m = std::max(m, xv[(o * v.length + a) * v.inner + i]);
      double s = 0.0;
      for (std::size_t a = 0; a < v.length; ++a) s += std::exp(xv[(o * v.length + a) * v.inner + i] - m);
      y[o * v.inner + i] = m + std::log(s);
    }
  const std::size_t ix = x.id();
  const std::size_t iy = x.tape().size();
  Var in[] = {x};
  return x.tape().record("logsumexp", std::move(y), in, [ix, iy, v](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(ix);
    const Tensor& yv = t.value(iy);
    Tensor gx(xv.shape());
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t a = 0; a < v.length; ++a)
        for (std::size_t i = 0; i < v.inner; ++i) {
          const std::size_t k = (o * v.length + a) * v.inner + i;
          gx[k] = g[o * v.inner + i] * std::exp(xv[k] - yv[o * v.inner + i]);
        }
    t.accumulate(ix, std::move(gx));
  });
}

// ---------------------------------------------------------------------------
// Shape manipulation

Var reshape(const Var& x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  const std::size_t ix = x.id();
  Var in[] = {x};
  return x.tape().record("reshape", std::move(y), in, [ix](Tape& t, const Tensor& g) {
    t.accumulate(ix, g.reshaped(t.value(ix).shape()));
  });
}

Var broadcast_to(const Var& x, Shape shape) {
  Tensor y = broadcast_tensor(x.value(), shape);
  const std::size_t ix = x.id();
  Var in[] = {x};
  return x.tape().record("broadcast_to", std::move(y), in, [ix](Tape& t, const Tensor& g) {
    t.accumulate(ix, reduce_to_shape(g, t.value(ix).shape()));
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  Tape& tape = parts.front().tape();
  Shape out_shape = parts.front().shape();
  if (axis >= out_shape.size()) throw ShapeError("concat: axis out of range");
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (&p.tape() != &tape) throw Error("concat operands recorded on different tapes");
    Shape s = p.shape();
    if (s.size() != out_shape.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != out_shape[d]) {
        throw ShapeError("concat: shapes " + to_string(s) + " and " + to_string(out_shape) + " differ off-axis");
      }
    }
    total += s[axis];
  }
  out_shape[axis] = total;
  const auto ov = detail::axis_view(out_shape, axis);
  Tensor y(out_shape);
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const std::size_t len = p.shape()[axis];
    const Tensor& pv = p.value();
    for (std::size_t o = 0; o < ov.outer; ++o)
      std::copy_n(pv.data().begin() + static_cast<std::ptrdiff_t>(o * len * ov.inner), len * ov.inner,
                  y.data().begin() + static_cast<std::ptrdiff_t>((o * ov.length + offset) * ov.inner));
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += len;
  }
  return tape.record("concat", std::move(y), parts, [ids, offsets, ov](Tape& t, const Tensor& g) {
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (!t.tracked(ids[p])) continue;
      const Shape& s = t.value(ids[p]).shape();
      const std::size_t plen = numel(s) / (ov.outer * ov.inner);
      Tensor gp(s);
      for (std::size_t o = 0; o < ov.outer; ++o)
        std::copy_n(g.data().begin() + static_cast<std::ptrdiff_t>((o * ov.length + offsets[p]) * ov.inner),
                    plen * ov.inner, gp.data().begin() + static_cast<std::ptrdiff_t>(o * plen * ov.inner));
      t.accumulate(ids[p], std::move(gp));
    }
  });
}

Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end) {
  check_axis(x, axis, "slice");
  const auto v = detail::axis_view(x.shape(), axis);
  if (begin > end || end > v.length) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range for " +
                     to_string(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t len = end - begin;
  Tensor y(out_shape);
  const Tensor& xv = x.value();
  for (std::size_t o = 0; o < v.outer; ++o)
    std::copy_n(xv.data().begin() + static_cast<std::ptrdiff_t>((o * v.length + begin) * v.inner), len * v.inner,
                y.data().begin() + static_cast<std::ptrdiff_t>(o * len * v.inner));
  const std::size_t ix = x.id();
  Var in[] = {x};
  return x.tape().record("slice", std::move(y), in, [ix, v, begin, len](Tape& t, const Tensor& g) {
    Tensor gx(t.value(ix).shape(), 0.0);
    for (std::size_t o = 0; o < v.outer; ++o)
      std::copy_n(g.data().begin() + static_cast<std::ptrdiff_t>(o * len * v.inner), len * v.inner,
                  gx.data().begin() + static_cast<std::ptrdiff_t>((o * v.length + begin) * v.inner));
    t.accumulate(ix, std::move(gx));
  });
}

// ---------------------------------------------------------------------------
// Gradient routing

Var stop_gradient(const Var& x) { return x.tape().constant(x.value()); }

Var straight_through(const Var& continuous, const Tensor& quantized) {
  if (continuous.shape() != quantized.shape()) {
    throw ShapeError("straight_through: shapes " + to_string(continuous.shape()) + " and " +
                     to_string(quantized.shape()) + " differ");
  }
  const std::size_t ic = continuous.id();
  Var in[] = {continuous};
  return continuous.tape().record("straight_through", quantized, in,
                                  [ic](Tape& t, const Tensor& g) { t.accumulate(ic, g); });
}

Var gather_columns(const Var& table, std::span<const std::size_t> indices, std::size_t rows) {
  const Shape& s = table.shape();
  if (s.size() != 2) throw ShapeError("gather_columns: table must be 2-D");
  const std::size_t cols = s[0];
  const std::size_t values = s[1];
  if (indices.size() != rows * cols) throw ShapeError("gather_columns: index count mismatch");
  Tensor y(Shape{rows, cols});
  const Tensor& tv = table.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t k = indices[r * cols + c];
      if (k >= values) throw ShapeError("gather_columns: index out of range");
      y.at(r, c) = tv.at(c, k);
    }
  const std::size_t it = table.id();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  Var in[] = {table};
  return table.tape().record("gather_columns", std::move(y), in,
                             [it, idx = std::move(idx), rows, cols](Tape& t, const Tensor& g) {
                               Tensor gt(t.value(it).shape(), 0.0);
                               for (std::size_t r = 0; r < rows; ++r)
                                 for (std::size_t c = 0; c < cols; ++c) gt.at(c, idx[r * cols + c]) += g.at(r, c);
                               t.accumulate(it, std::move(gt));
                             });
}

}  // namespace tripod
