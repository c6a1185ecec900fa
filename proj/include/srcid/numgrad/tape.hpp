#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "srcid/numgrad/param_store.hpp"
#include "srcid/numgrad/tensor.hpp"

namespace srcid::numgrad {

class Tape;

// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order; backward() walks
// them in reverse and adds each reached parameter's adjoint into the owning
// ParamStore's gradient accumulator.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(ParamStore& store, std::string_view name);
  Var param(ParamStore::Entry& entry);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  // Adjoint after backward(); a zero tensor when the node was not reached.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  // `loss` must be 1x1.
  void backward(Var loss);

  // Stop-gradient replay. Every stop_gradient / straight_through node records
  // the constant it injected; a tape frozen with a previous tape's record
  // injects those constants instead (in creation order). Finite differences
  // on a frozen tape therefore differentiate the surrogate where sg[.] is a
  // constant.
  void freeze_stop_gradients(std::vector<Tensor> record);
  const std::vector<Tensor>& stop_gradient_record() const { return sg_record_; }
  bool frozen() const { return frozen_; }

  // Op-author interface.
  Var record(Tensor value, std::span<const Var> parents, BackwardFn fn);
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                  std::move(fn));
  }
  const Tensor& node_value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& node_grad(std::size_t id) const { return nodes_[id].grad; }
  bool node_needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  std::size_t parent(std::size_t id, std::size_t k) const { return nodes_[id].parents[k]; }
  void accumulate(std::size_t id, const Tensor& g);
  // grad slot of `id`, allocated as zeros when absent.
  Tensor& grad_slot(std::size_t id);
  // Next sg constant: `live` when recording, the frozen value otherwise.
  Tensor take_stop_gradient(const Tensor& live);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    ParamStore::Entry* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  std::vector<Tensor> sg_record_;
  std::size_t sg_cursor_ = 0;
  bool frozen_ = false;
};

// ---- op set ----------------------------------------------------------------

Var matmul(Var a, Var b);     // a * b
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var add_row(Var a, Var row);  // row (1 x c) added to every row of a
Var tanh(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var sum(Var a);       // -> 1x1
Var mean(Var a);      // -> 1x1
Var row_sum(Var a);   // -> r x 1
// Rows are grouped in consecutive blocks of `block_rows`; every row is
// replaced by the mean of its block.
Var block_mean(Var a, std::size_t block_rows);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
// Mean over rows of -log softmax(logits[r])[labels[r]].
Var softmax_xent(Var logits, std::span<const int> labels);
// Value of `a`, zero adjoint upstream.
Var stop_gradient(Var a);
// Forward value `quantized`; backward passes the adjoint to z unchanged. This
// is z + sg[quantized - z] with the sum evaluated exactly.
Var straight_through(Var z, const Tensor& quantized);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator-(Var a) { return scale(a, -1.0); }

}  // namespace srcid::numgrad
