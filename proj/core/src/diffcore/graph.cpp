#include "ipred/diffcore/graph.hpp"

#include <string>

#include "ipred/error.hpp"

namespace ipred::dc {

namespace {

void require_same(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

Var Graph::push(Matrix value, bool requires_grad, std::function<void(Graph&, const Node&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Graph::param(Parameter& p) {
  Var v = push(Matrix(p.value.matrix()), true, nullptr);
  nodes_[v.id].param = &p;
  return v;
}

Var Graph::matmul_t(Var x, Var w) {
  const Matrix& xv = value(x);
  const Matrix& wv = value(w);
  if (xv.cols() != wv.cols())
    throw ShapeError("matmul_t: input width " + std::to_string(xv.cols()) + " does not match weight width " +
                     std::to_string(wv.cols()));
  Matrix out = xv * wv.transpose();
  return push(std::move(out), needs(x) || needs(w), [x, w](Graph& g, const Node& self) {
    if (g.needs(x)) g.grad_of(x).noalias() += self.grad * g.value(w);
    if (g.needs(w)) g.grad_of(w).noalias() += self.grad.transpose() * g.value(x);
  });
}

Var Graph::add_row(Var x, Var row) {
  const Matrix& xv = value(x);
  const Matrix& rv = value(row);
  if (rv.rows() != 1 || rv.cols() != xv.cols())
    throw ShapeError("add_row: row of width " + std::to_string(rv.cols()) + " cannot broadcast over width " +
                     std::to_string(xv.cols()));
  Matrix out = xv.rowwise() + rv.row(0);
  return push(std::move(out), needs(x) || needs(row), [x, row](Graph& g, const Node& self) {
    if (g.needs(x)) g.grad_of(x) += self.grad;
    if (g.needs(row)) g.grad_of(row) += self.grad.colwise().sum();
  });
}

Var Graph::add(Var a, Var b) {
  require_same(value(a), value(b), "add");
  Matrix out = value(a) + value(b);
  return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, const Node& self) {
    if (g.needs(a)) g.grad_of(a) += self.grad;
    if (g.needs(b)) g.grad_of(b) += self.grad;
  });
}

Var Graph::sub(Var a, Var b) {
  require_same(value(a), value(b), "sub");
  Matrix out = value(a) - value(b);
  return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, const Node& self) {
    if (g.needs(a)) g.grad_of(a) += self.grad;
    if (g.needs(b)) g.grad_of(b) -= self.grad;
  });
}

Var Graph::mul(Var a, Var b) {
  require_same(value(a), value(b), "mul");
  Matrix out = value(a).cwiseProduct(value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, const Node& self) {
    if (g.needs(a)) g.grad_of(a) += self.grad.cwiseProduct(g.value(b));
    if (g.needs(b)) g.grad_of(b) += self.grad.cwiseProduct(g.value(a));
  });
}

Var Graph::scale(Var a, double k) {
  Matrix out = k * value(a);
  return push(std::move(out), needs(a), [a, k](Graph& g, const Node& self) { g.grad_of(a) += k * self.grad; });
}

Var Graph::add_scalar(Var a, double k) {
  Matrix out = value(a).array() + k;
  return push(std::move(out), needs(a), [a](Graph& g, const Node& self) { g.grad_of(a) += self.grad; });
}

Var Graph::tanh(Var a) {
  Matrix out = value(a).array().tanh();
  return push(std::move(out), needs(a), [a](Graph& g, const Node& self) {
    g.grad_of(a).array() += self.grad.array() * (1.0 - self.value.array().square());
  });
}

Var Graph::sigmoid(Var a) {
  Matrix out = (1.0 + (-value(a).array()).exp()).inverse();
  return push(std::move(out), needs(a), [a](Graph& g, const Node& self) {
    g.grad_of(a).array() += self.grad.array() * self.value.array() * (1.0 - self.value.array());
  });
}

Var Graph::exp(Var a) {
  Matrix out = value(a).array().exp();
  return push(std::move(out), needs(a), [a](Graph& g, const Node& self) {
    g.grad_of(a).array() += self.grad.array() * self.value.array();
  });
}

Var Graph::square(Var a) {
  Matrix out = value(a).array().square();
  return push(std::move(out), needs(a), [a](Graph& g, const Node& self) {
    g.grad_of(a).array() += 2.0 * self.grad.array() * g.value(a).array();
  });
}

Var Graph::mask(Var a, const Matrix& m) {
  require_same(value(a), m, "mask");
  Matrix out = value(a).cwiseProduct(m);
  return push(std::move(out), needs(a),
              [a, m](Graph& g, const Node& self) { g.grad_of(a) += self.grad.cwiseProduct(m); });
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool req = false;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw ShapeError("concat_cols: row count mismatch");
    cols += value(p).cols();
    req = req || needs(p);
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (Var p : parts) {
    out.middleCols(off, value(p).cols()) = value(p);
    off += value(p).cols();
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return push(std::move(out), req, [ids](Graph& g, const Node& self) {
    Eigen::Index o = 0;
    for (Var p : ids) {
      const Eigen::Index w = g.value(p).cols();
      if (g.needs(p)) g.grad_of(p) += self.grad.middleCols(o, w);
      o += w;
    }
  });
}

Var Graph::slice_cols(Var a, std::size_t start, std::size_t count) {
  const Matrix& av = value(a);
  if (count == 0 || start + count > static_cast<std::size_t>(av.cols()))
    throw ShapeError("slice_cols: range out of bounds");
  const auto s = static_cast<Eigen::Index>(start);
  const auto c = static_cast<Eigen::Index>(count);
  Matrix out = av.middleCols(s, c);
  return push(std::move(out), needs(a),
              [a, s, c](Graph& g, const Node& self) { g.grad_of(a).middleCols(s, c) += self.grad; });
}

Var Graph::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), needs(a),
              [a](Graph& g, const Node& self) { g.grad_of(a).array() += self.grad(0, 0); });
}

Var Graph::mean(Var a) {
  const double n = static_cast<double>(value(a).size());
  Matrix out(1, 1);
  out(0, 0) = value(a).sum() / n;
  return push(std::move(out), needs(a),
              [a, n](Graph& g, const Node& self) { g.grad_of(a).array() += self.grad(0, 0) / n; });
}

Var Graph::row_sum(Var a) {
  Matrix out = value(a).rowwise().sum();
  return push(std::move(out), needs(a), [a](Graph& g, const Node& self) {
    g.grad_of(a).colwise() += self.grad.col(0);
  });
}

void Graph::backward(Var root) {
  if (root.id >= nodes_.size()) throw InvalidArgument("backward: unknown root");
  const Matrix& rv = nodes_[root.id].value;
  if (rv.rows() != 1 || rv.cols() != 1)
    throw ShapeError("backward: loss root must be scalar, got " + std::to_string(rv.rows()) + "x" +
                     std::to_string(rv.cols()));
  for (std::size_t i = 0; i <= root.id; ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  if (!nodes_[root.id].requires_grad) return;
  nodes_[root.id].grad(0, 0) = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.backprop) n.backprop(*this, n);
    if (n.param) n.param->grad.matrix() += n.grad;
  }
}

}  // namespace ipred::dc
