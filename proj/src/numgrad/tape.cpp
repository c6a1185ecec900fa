#include "srcid/numgrad/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "srcid/error.hpp"
#include "srcid/numgrad/kernels.hpp"

namespace srcid::numgrad {

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::param(ParamStore& store, std::string_view name) { return param(store.entry(name)); }

Var Tape::param(ParamStore::Entry& entry) {
  Node n;
  n.value = entry.value;
  n.param = &entry;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Tensor Tape::grad(Var v) const {
  const auto& n = nodes_[v.id];
  if (n.grad.empty() && !n.value.empty()) return Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const Var& p : parents) {
    if (p.tape != this) throw Error("tape: operand belongs to a different tape");
    n.parents.push_back(p.id);
    n.needs_grad = n.needs_grad || nodes_[p.id].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_slot(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  if (!nodes_[id].needs_grad) return;
  auto& slot = grad_slot(id);
  require_same_shape(slot, g, "accumulate");
  for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i];
}

void Tape::backward(Var loss) {
  const auto& out = nodes_[loss.id].value;
  if (out.rows() != 1 || out.cols() != 1)
    throw ShapeError("backward: loss must be scalar, got " + out.shape_str());
  for (auto& n : nodes_) n.grad = Tensor();
  if (!nodes_[loss.id].needs_grad) return;
  grad_slot(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) n.param->grad.axpy(1.0, n.grad);
  }
}

void Tape::freeze_stop_gradients(std::vector<Tensor> record) {
  sg_record_ = std::move(record);
  sg_cursor_ = 0;
  frozen_ = true;
}

Tensor Tape::take_stop_gradient(const Tensor& live) {
  if (!frozen_) {
    sg_record_.push_back(live);
    return live;
  }
  if (sg_cursor_ >= sg_record_.size())
    throw Error("frozen tape: more stop-gradient nodes than recorded");
  const Tensor& t = sg_record_[sg_cursor_++];
  require_same_shape(t, live, "stop_gradient replay");
  return t;
}

// ---- ops -------------------------------------------------------------------

namespace {

Tensor map(const Tensor& a, auto&& f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

void check_same(Var a, Var b, const char* op) { require_same_shape(a.value(), b.value(), op); }

// Unary elementwise op whose derivative is expressed through input x and output y.
Var unary(Var a, auto&& f, auto&& dfdx) {
  Tape& tape = *a.tape;
  Tensor y = map(a.value(), f);
  return tape.record(std::move(y), {a}, [dfdx](Tape& t, std::size_t self) {
    const auto pa = t.parent(self, 0);
    const Tensor& x = t.node_value(pa);
    const Tensor& yv = t.node_value(self);
    const Tensor& g = t.node_grad(self);
    Tensor d(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = g[i] * dfdx(x[i], yv[i]);
    t.accumulate(pa, d);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = *a.tape;
  Tensor c = kernels::matmul(a.value(), b.value());
  return tape.record(std::move(c), {a, b}, [](Tape& t, std::size_t self) {
    const auto pa = t.parent(self, 0), pb = t.parent(self, 1);
    const Tensor& g = t.node_grad(self);
    if (t.node_needs_grad(pa)) t.accumulate(pa, kernels::matmul_nt(g, t.node_value(pb)));
    if (t.node_needs_grad(pb)) t.accumulate(pb, kernels::matmul_tn(t.node_value(pa), g));
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& tape = *a.tape;
  Tensor c = kernels::matmul_nt(a.value(), b.value());
  return tape.record(std::move(c), {a, b}, [](Tape& t, std::size_t self) {
    const auto pa = t.parent(self, 0), pb = t.parent(self, 1);
    const Tensor& g = t.node_grad(self);
    // c = a b^T: da = g b, db = g^T a
    if (t.node_needs_grad(pa)) t.accumulate(pa, kernels::matmul(g, t.node_value(pb)));
    if (t.node_needs_grad(pb)) t.accumulate(pb, kernels::matmul_tn(g, t.node_value(pa)));
  });
}

Var add(Var a, Var b) {
  check_same(a, b, "add");
  Tensor c = a.value();
  c.axpy(1.0, b.value());
  return a.tape->record(std::move(c), {a, b}, [](Tape& t, std::size_t self) {
    t.accumulate(t.parent(self, 0), t.node_grad(self));
    t.accumulate(t.parent(self, 1), t.node_grad(self));
  });
}

Var sub(Var a, Var b) {
  check_same(a, b, "sub");
  Tensor c = a.value();
  c.axpy(-1.0, b.value());
  return a.tape->record(std::move(c), {a, b}, [](Tape& t, std::size_t self) {
    t.accumulate(t.parent(self, 0), t.node_grad(self));
    const auto pb = t.parent(self, 1);
    if (!t.node_needs_grad(pb)) return;
    Tensor& slot = t.grad_slot(pb);
    slot.axpy(-1.0, t.node_grad(self));
  });
}

Var mul(Var a, Var b) {
  check_same(a, b, "mul");
  Tensor c(a.rows(), a.cols());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.value()[i] * b.value()[i];
  return a.tape->record(std::move(c), {a, b}, [](Tape& t, std::size_t self) {
    const auto pa = t.parent(self, 0), pb = t.parent(self, 1);
    const Tensor& g = t.node_grad(self);
    for (auto [p, q] : {std::pair{pa, pb}, std::pair{pb, pa}}) {
      if (!t.node_needs_grad(p)) continue;
      const Tensor& other = t.node_value(q);
      Tensor& slot = t.grad_slot(p);
      for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * other[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor c = map(a.value(), [s](double x) { return s * x; });
  return a.tape->record(std::move(c), {a}, [s](Tape& t, std::size_t self) {
    const auto pa = t.parent(self, 0);
    Tensor& slot = t.grad_slot(pa);
    slot.axpy(s, t.node_grad(self));
  });
}

Var add_scalar(Var a, double s) {
  Tensor c = map(a.value(), [s](double x) { return x + s; });
  return a.tape->record(std::move(c), {a}, [](Tape& t, std::size_t self) {
    t.accumulate(t.parent(self, 0), t.node_grad(self));
  });
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols())
    throw ShapeError("add_row: lhs " + av.shape_str() + " row operand " + rv.shape_str());
  Tensor c = av;
  for (std::size_t r = 0; r < c.rows(); ++r)
    for (std::size_t j = 0; j < c.cols(); ++j) c(r, j) += rv[j];
  return a.tape->record(std::move(c), {a, row}, [](Tape& t, std::size_t self) {
    const Tensor& g = t.node_grad(self);
    t.accumulate(t.parent(self, 0), g);
    const auto pr = t.parent(self, 1);
    if (!t.node_needs_grad(pr)) return;
    Tensor& slot = t.grad_slot(pr);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t j = 0; j < g.cols(); ++j) slot[j] += g(r, j);
  });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
               [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape->record(Tensor::scalar(s), {a}, [](Tape& t, std::size_t self) {
    const auto pa = t.parent(self, 0);
    const double g = t.node_grad(self)[0];
    Tensor& slot = t.grad_slot(pa);
    for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += g;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  const Tensor& av = a.value();
  Tensor c(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (double v : av.row(r)) s += v;
    c[r] = s;
  }
  return a.tape->record(std::move(c), {a}, [](Tape& t, std::size_t self) {
    const auto pa = t.parent(self, 0);
    const Tensor& g = t.node_grad(self);
    Tensor& slot = t.grad_slot(pa);
    for (std::size_t r = 0; r < slot.rows(); ++r)
      for (std::size_t j = 0; j < slot.cols(); ++j) slot(r, j) += g[r];
  });
}

Var block_mean(Var a, std::size_t block_rows) {
  const Tensor& av = a.value();
  if (block_rows == 0 || av.rows() % block_rows != 0)
    throw ShapeError("block_mean: " + av.shape_str() + " not divisible into blocks of " +
                     std::to_string(block_rows));
  const std::size_t nb = av.rows() / block_rows, c = av.cols();
  const double inv = 1.0 / static_cast<double>(block_rows);
  auto block_means = [nb, block_rows, c, inv](const Tensor& src) {
    Tensor out(src.rows(), c);
    for (std::size_t b = 0; b < nb; ++b) {
      std::vector<double> m(c, 0.0);
      for (std::size_t r = 0; r < block_rows; ++r)
        for (std::size_t j = 0; j < c; ++j) m[j] += src(b * block_rows + r, j);
      for (std::size_t r = 0; r < block_rows; ++r)
        for (std::size_t j = 0; j < c; ++j) out(b * block_rows + r, j) = m[j] * inv;
    }
    return out;
  };
  Tensor out = block_means(av);
  // The operator is symmetric, so the adjoint is the same block mean of g.
  return a.tape->record(std::move(out), {a}, [block_means](Tape& t, std::size_t self) {
    t.accumulate(t.parent(self, 0), block_means(t.node_grad(self)));
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  if (parts.size() == 1) return parts[0];
  std::vector<Tensor> vals;
  vals.reserve(parts.size());
  for (const Var& p : parts) vals.push_back(p.value());
  std::vector<std::size_t> widths;
  for (const auto& v : vals) widths.push_back(v.cols());
  Tensor out = numgrad::concat_cols(vals);
  return parts[0].tape->record(std::move(out), parts, [widths](Tape& t, std::size_t self) {
    const Tensor& g = t.node_grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const auto p = t.parent(self, k);
      if (t.node_needs_grad(p)) {
        Tensor& slot = t.grad_slot(p);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t j = 0; j < widths[k]; ++j) slot(r, j) += g(r, off + j);
      }
      off += widths[k];
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  if (begin + count > av.cols())
    throw ShapeError("slice_cols [" + std::to_string(begin) + ", +" + std::to_string(count) +
                     ") out of range for " + av.shape_str());
  Tensor out(av.rows(), count);
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t j = 0; j < count; ++j) out(r, j) = av(r, begin + j);
  return a.tape->record(std::move(out), {a}, [begin, count](Tape& t, std::size_t self) {
    const auto pa = t.parent(self, 0);
    const Tensor& g = t.node_grad(self);
    Tensor& slot = t.grad_slot(pa);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t j = 0; j < count; ++j) slot(r, begin + j) += g(r, j);
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  Tensor out = numgrad::slice_rows(a.value(), begin, count);
  return a.tape->record(std::move(out), {a}, [begin](Tape& t, std::size_t self) {
    const auto pa = t.parent(self, 0);
    const Tensor& g = t.node_grad(self);
    Tensor& slot = t.grad_slot(pa);
    const std::size_t c = g.cols();
    for (std::size_t i = 0; i < g.size(); ++i) slot[begin * c + i] += g[i];
  });
}

Var softmax_xent(Var logits, std::span<const int> labels) {
  const Tensor& z = logits.value();
  if (labels.size() != z.rows())
    throw ShapeError("softmax_xent: " + std::to_string(labels.size()) + " labels for logits " +
                     z.shape_str());
  const std::size_t n = z.rows(), c = z.cols();
  Tensor probs(n, c);
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= c)
      throw ShapeError("softmax_xent: label " + std::to_string(y) + " out of range for " +
                       std::to_string(c) + " classes");
    double mx = z(r, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, z(r, j));
    double se = 0.0;
    for (std::size_t j = 0; j < c; ++j) se += std::exp(z(r, j) - mx);
    const double lse = mx + std::log(se);
    for (std::size_t j = 0; j < c; ++j) probs(r, j) = std::exp(z(r, j) - lse);
    loss += lse - z(r, static_cast<std::size_t>(y));
  }
  loss /= static_cast<double>(n);
  std::vector<int> ys(labels.begin(), labels.end());
  return logits.tape->record(
      Tensor::scalar(loss), {logits},
      [probs = std::move(probs), ys = std::move(ys)](Tape& t, std::size_t self) {
        const auto pa = t.parent(self, 0);
        const double g = t.node_grad(self)[0] / static_cast<double>(probs.rows());
        Tensor& slot = t.grad_slot(pa);
        for (std::size_t r = 0; r < probs.rows(); ++r)
          for (std::size_t j = 0; j < probs.cols(); ++j) {
            const double onehot = (static_cast<int>(j) == ys[r]) ? 1.0 : 0.0;
            slot(r, j) += g * (probs(r, j) - onehot);
          }
      });
}

Var stop_gradient(Var a) {
  Tensor v = a.tape->take_stop_gradient(a.value());
  return a.tape->constant(std::move(v));
}

Var straight_through(Var z, const Tensor& quantized) {
  Tape& tape = *z.tape;
  require_same_shape(z.value(), quantized, "straight_through");
  Tensor offset(quantized.rows(), quantized.cols());
  for (std::size_t i = 0; i < offset.size(); ++i) offset[i] = quantized[i] - z.value()[i];
  const bool frozen = tape.frozen();
  Tensor used = tape.take_stop_gradient(offset);
  // Live tapes emit the quantized values bit-exactly; frozen replays
  // evaluate z + recorded offset so finite differences see the surrogate.
  Tensor out;
  if (frozen) {
    out = z.value();
    out.axpy(1.0, used);
  } else {
    out = quantized;
  }
  return tape.record(std::move(out), {z}, [](Tape& t, std::size_t self) {
    t.accumulate(t.parent(self, 0), t.node_grad(self));
  });
}

}  // namespace srcid::numgrad
