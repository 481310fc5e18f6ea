#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "ipred/diffcore/graph.hpp"
#include "ipred/diffcore/params.hpp"
#include "ipred/diffcore/tensor.hpp"
#include "ipred/rng.hpp"

namespace ipred::dc {

enum class Activation { identity, tanh, sigmoid };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Standalone dense layer: activation(x W^T + b).
struct DenseLayer {
  Tensor W;  // [out x in]
  Tensor b;  // [out]
  Activation activation = Activation::identity;

  std::size_t in() const { return W.cols(); }
  std::size_t out() const { return W.rows(); }
};

// Standalone LSTM cell. Gate blocks are stacked in the order input, forget,
// output, candidate along the first axis of W_ih, W_hh and b.
struct LstmCell {
  Tensor W_ih;  // [4H x in]
  Tensor W_hh;  // [4H x H]
  Tensor b;     // [4H]
  std::size_t hidden_size = 0;
};

// x may be [in] or [B x in]; output keeps the same rank.
Tensor dense_forward(const DenseLayer& layer, const Tensor& x);

// x: [in] or [B x in]; h_prev, c_prev: [H] or [B x H].
std::pair<Tensor, Tensor> lstm_step(const LstmCell& cell, const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev);

// ---------------------------------------------------------------------------
// Parameter-store-backed blocks used inside models. Parameter names are
// `<name>.W`, `<name>.b` (dense) and `<name>.W_ih`, `<name>.W_hh`,
// `<name>.b` (LSTM).

struct DenseBlock {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::identity;

  void init(ParamStore& store, Rng& rng) const;
  Var forward(Graph& g, ParamStore& store, Var x) const;
  DenseLayer layer(const ParamStore& store) const;
};

struct LstmBlock {
  std::string name;
  std::size_t in = 0;
  std::size_t hidden = 0;

  void init(ParamStore& store, Rng& rng) const;
  // One step; returns (h, c).
  std::pair<Var, Var> step(Graph& g, Var w_ih, Var w_hh, Var b, Var x, Var h, Var c) const;
  // Runs the cell over `inputs` (one [B x in] matrix per time step) from
  // zero state and returns the final hidden state.
  Var run(Graph& g, ParamStore& store, std::span<const Var> inputs) const;
  LstmCell cell(const ParamStore& store) const;
};

Var apply_activation(Graph& g, Var x, Activation a);

}  // namespace ipred::dc
