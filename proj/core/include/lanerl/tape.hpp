#pragma once

#include <functional>
#include <vector>

#include "lanerl/tensor.hpp"

namespace lanerl::nn {

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape at array-op granularity. One tape records one forward
/// pass; backward() runs once and visits every recorded node exactly once,
/// in reverse recording order. Nodes whose result cannot influence any
/// gradient-requiring leaf are skipped during the sweep.
class Tape {
 public:
  Var input(Tensor value, bool requires_grad = false);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient of the loss w.r.t. v; valid after backward().
  const Tensor& grad(Var v) const;

  /// Accumulates dLoss/dNode for every node with requires_grad, seeding
  /// dLoss/dLoss = 1. The loss must be a single-element tensor.
  void backward(Var loss);

  bool backward_done() const { return backward_done_; }
  std::size_t size() const { return nodes_.size(); }

  // --- recording interface used by the op library ---
  using BackFn = std::function<void(Tape&)>;
  Var record(Tensor value, bool requires_grad);
  void set_back(Var v, BackFn back);
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  Tensor& grad_buffer(Var v);  // allocated zeros on first touch

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_ready = false;
    BackFn back;  // empty for leaves
  };
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// ---- elementwise ----
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var min_elem(Tape& t, Var a, Var b);  // ties route gradient to the first arg
Var neg(Tape& t, Var a);
Var add_scalar(Tape& t, Var a, double s);
Var mul_scalar(Tape& t, Var a, double s);
Var relu(Tape& t, Var a);
Var tanh_op(Tape& t, Var a);
Var exp_op(Tape& t, Var a);
Var square(Tape& t, Var a);
Var softplus(Tape& t, Var a);  // log(1 + e^x), overflow-safe
Var clamp(Tape& t, Var a, double lo, double hi);  // zero gradient outside

// ---- reductions ----
Var sum_all(Tape& t, Var a);   // -> {1}
Var mean_all(Tape& t, Var a);  // -> {1}

// ---- shape ops on (N, D) matrices ----
Var concat_cols(Tape& t, const std::vector<Var>& parts);
Var slice_cols(Tape& t, Var a, int begin, int end);
/// Row-wise sum of an (N, D) matrix -> (N, 1).
Var sum_rows(Tape& t, Var a);

// ---- layers ----
/// x: (N, D), w: (O, D), b: (O) -> (N, O)
Var fc(Tape& t, Var x, Var w, Var b);
/// x: (N, C, H, W), w: (O, C, kh, kw), b: (O); zero padding `pad`, square stride.
Var conv2d(Tape& t, Var x, Var w, Var b, int stride, int pad);
/// Global average pooling (N, C, H, W) -> (N, C).
Var global_avg_pool(Tape& t, Var x);

}  // namespace lanerl::nn
