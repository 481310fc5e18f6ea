#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ipred/diffcore/params.hpp"
#include "ipred/diffcore/tensor.hpp"

namespace ipred::dc {

class Graph;

// Handle to a node recorded on a Graph tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

// Reverse-mode tape over batched matrices (rows = batch). Every op records
// its value eagerly; backward() replays the tape in reverse and accumulates
// parameter gradients into Parameter::grad.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  // Leaf bound to a parameter. Rank-1 parameters appear as a 1 x n row.
  Var param(Parameter& p);

  // x * W^T for x [B x in], W [out x in].
  Var matmul_t(Var x, Var w);
  // Adds a 1 x n row to every row of x.
  Var add_row(Var x, Var row);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double k);
  Var add_scalar(Var a, double k);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var exp(Var a);
  Var square(Var a);
  // Elementwise multiply by a fixed (non-differentiable) mask.
  Var mask(Var a, const Matrix& m);
  Var concat_cols(std::span<const Var> parts);
  Var slice_cols(Var a, std::size_t start, std::size_t count);
  // 1 x 1 results.
  Var sum(Var a);
  Var mean(Var a);
  // B x 1: per-row sum.
  Var row_sum(Var a);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Root must be 1 x 1. Adds d(root)/d(param) into each bound Parameter's
  // grad (callers zero them first).
  void backward(Var root);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void(Graph&, const Node&)> backprop;
  };

  Var push(Matrix value, bool requires_grad, std::function<void(Graph&, const Node&)> backprop);
  Matrix& grad_of(Var v) { return nodes_[v.id].grad; }
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }

  std::vector<Node> nodes_;
};

}  // namespace ipred::dc
