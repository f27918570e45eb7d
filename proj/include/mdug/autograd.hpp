#pragma once

// Reverse-mode automatic differentiation over 2-D matrices.
//
// A Graph is a tape: every op appends a node whose value is computed eagerly,
// and backward() walks the tape in reverse. Parameter gradients are added into
// Parameter::grad, so one graph per sample followed by an optimizer step
// implements mini-batch accumulation.

#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "mdug/matrix.hpp"
#include "mdug/params.hpp"

namespace mdug {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  /// `training` enables dropout; `rng` is required when it does.
  explicit Graph(bool training = false, Rng* rng = nullptr) : training_(training), rng_(rng) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool training() const { return training_; }

  Var constant(Matrix m);
  Var param(Parameter& p);
  /// Rows of a parameter table (embedding lookup); gradients scatter back into p.grad.
  Var embed(Parameter& table, std::span<const int> rows);

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  /// a + broadcast of a 1 x n row to every row of a.
  Var add_row(Var a, Var row);
  Var scale(Var a, double s);
  /// a + c for a constant c (attention masks).
  Var add_constant(Var a, const Matrix& c);
  Var softmax(Var a);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var gelu(Var x);
  Var dropout(Var x, double rate);
  Var slice_cols(Var x, int begin, int end);
  Var concat_cols(std::span<const Var> parts);
  Var gather_rows(Var x, std::span<const int> rows);
  /// Σ w_i * s_i over 1 x 1 scalars.
  Var weighted_sum(std::span<const Var> scalars, std::span<const double> weights);

  /// Mean binary cross-entropy of an n x 1 logit column; positives weighted by pos_weight.
  Var bce_with_logits(Var logits, std::span<const int> gold, double pos_weight = 1.0);
  /// Mean softmax cross-entropy of n x V logits against one target id per row.
  Var cross_entropy(Var logits, std::span<const int> targets);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient of the last backward() target w.r.t. v (empty if v did not influence it).
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
  double scalar(Var v) const { return value(v)(0, 0); }

  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Parameter* param = nullptr;
    bool needs_grad = false;
    std::function<void()> back;
  };

  Var push(Matrix value, bool needs_grad);
  Node& node(Var v) { return nodes_[v.id]; }
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  /// Gradient buffer of v, zero-initialised on first use.
  Matrix& grad_buffer(Var v);

  bool training_;
  Rng* rng_;
  std::deque<Node> nodes_;  // deque: references to earlier nodes survive later pushes
};

}  // namespace mdug
