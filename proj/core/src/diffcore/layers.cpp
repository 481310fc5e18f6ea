#include "ipred/diffcore/layers.hpp"

#include <cmath>

#include "ipred/error.hpp"

namespace ipred::dc {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  throw InvalidArgument("unknown activation '" + s + "'");
}

namespace {

Matrix activate(Matrix m, Activation a) {
  switch (a) {
    case Activation::identity: return m;
    case Activation::tanh: return m.array().tanh();
    case Activation::sigmoid: return (1.0 + (-m.array()).exp()).inverse();
  }
  return m;
}

Tensor like_input(const Tensor& x, const Matrix& m) {
  if (x.rank() == 1) return Tensor({static_cast<std::size_t>(m.cols())}, std::vector<double>(m.data(), m.data() + m.size()));
  return Tensor::from_matrix(m);
}

}  // namespace

Tensor dense_forward(const DenseLayer& layer, const Tensor& x) {
  if (layer.b.size() != layer.out()) throw ShapeError("dense_forward: bias length does not match W rows");
  if (x.cols() != layer.in())
    throw ShapeError("dense_forward: input width " + std::to_string(x.cols()) + " does not match W " +
                     layer.W.shape_string());
  Matrix z = x.matrix() * layer.W.matrix().transpose();
  z.rowwise() += layer.b.matrix().row(0);
  return like_input(x, activate(std::move(z), layer.activation));
}

std::pair<Tensor, Tensor> lstm_step(const LstmCell& cell, const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev) {
  const std::size_t H = cell.hidden_size;
  if (cell.W_ih.rows() != 4 * H || cell.W_hh.rows() != 4 * H || cell.W_hh.cols() != H || cell.b.size() != 4 * H)
    throw ShapeError("lstm_step: gate tensors inconsistent with hidden size " + std::to_string(H));
  if (x.cols() != cell.W_ih.cols()) throw ShapeError("lstm_step: input width does not match W_ih");
  if (h_prev.cols() != H || c_prev.cols() != H) throw ShapeError("lstm_step: state width does not match hidden size");
  if (h_prev.rows() != x.rows() || c_prev.rows() != x.rows()) throw ShapeError("lstm_step: batch size mismatch");

  Matrix z = x.matrix() * cell.W_ih.matrix().transpose() + h_prev.matrix() * cell.W_hh.matrix().transpose();
  z.rowwise() += cell.b.matrix().row(0);
  const auto h = static_cast<Eigen::Index>(H);
  const Matrix i = activate(z.middleCols(0, h), Activation::sigmoid);
  const Matrix f = activate(z.middleCols(h, h), Activation::sigmoid);
  const Matrix o = activate(z.middleCols(2 * h, h), Activation::sigmoid);
  const Matrix cand = activate(z.middleCols(3 * h, h), Activation::tanh);
  const Matrix c = f.cwiseProduct(c_prev.matrix()) + i.cwiseProduct(cand);
  const Matrix hn = o.cwiseProduct(Matrix(c.array().tanh()));
  return {like_input(h_prev, hn), like_input(c_prev, c)};
}

Var apply_activation(Graph& g, Var x, Activation a) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::tanh: return g.tanh(x);
    case Activation::sigmoid: return g.sigmoid(x);
  }
  return x;
}

void DenseBlock::init(ParamStore& store, Rng& rng) const {
  store.add_uniform(name + ".W", {out, in}, in, rng);
  store.add_uniform(name + ".b", {out}, in, rng);
}

Var DenseBlock::forward(Graph& g, ParamStore& store, Var x) const {
  Var w = g.param(store.get(name + ".W"));
  Var b = g.param(store.get(name + ".b"));
  return apply_activation(g, g.add_row(g.matmul_t(x, w), b), activation);
}

DenseLayer DenseBlock::layer(const ParamStore& store) const {
  return DenseLayer{store.get(name + ".W").value, store.get(name + ".b").value, activation};
}

void LstmBlock::init(ParamStore& store, Rng& rng) const {
  store.add_uniform(name + ".W_ih", {4 * hidden, in}, in, rng);
  store.add_uniform(name + ".W_hh", {4 * hidden, hidden}, hidden, rng);
  store.add_uniform(name + ".b", {4 * hidden}, hidden, rng);
}

std::pair<Var, Var> LstmBlock::step(Graph& g, Var w_ih, Var w_hh, Var b, Var x, Var h, Var c) const {
  Var z = g.add_row(g.add(g.matmul_t(x, w_ih), g.matmul_t(h, w_hh)), b);
  Var i = g.sigmoid(g.slice_cols(z, 0, hidden));
  Var f = g.sigmoid(g.slice_cols(z, hidden, hidden));
  Var o = g.sigmoid(g.slice_cols(z, 2 * hidden, hidden));
  Var cand = g.tanh(g.slice_cols(z, 3 * hidden, hidden));
  Var c_next = g.add(g.mul(f, c), g.mul(i, cand));
  Var h_next = g.mul(o, g.tanh(c_next));
  return {h_next, c_next};
}

Var LstmBlock::run(Graph& g, ParamStore& store, std::span<const Var> inputs) const {
  if (inputs.empty()) throw ShapeError("LstmBlock::run: empty sequence");
  const Eigen::Index batch = g.value(inputs[0]).rows();
  Var w_ih = g.param(store.get(name + ".W_ih"));
  Var w_hh = g.param(store.get(name + ".W_hh"));
  Var b = g.param(store.get(name + ".b"));
  Var h = g.constant(Matrix::Zero(batch, static_cast<Eigen::Index>(hidden)));
  Var c = h;
  for (Var x : inputs) std::tie(h, c) = step(g, w_ih, w_hh, b, x, h, c);
  return h;
}

LstmCell LstmBlock::cell(const ParamStore& store) const {
  return LstmCell{store.get(name + ".W_ih").value, store.get(name + ".W_hh").value, store.get(name + ".b").value,
                  hidden};
}

}  // namespace ipred::dc
