#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ipred/diffcore/checkpoint.hpp"
#include "ipred/diffcore/gradcheck.hpp"
#include "ipred/diffcore/graph.hpp"
#include "ipred/diffcore/layers.hpp"
#include "ipred/diffcore/optim.hpp"
#include "ipred/diffcore/params.hpp"
#include "ipred/error.hpp"
#include "oracles.hpp"

using namespace ipred;
using namespace ipred::dc;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_SUITE("diffcore") {
  TEST_CASE("tensor shapes and validation") {
    const Tensor t({2, 3}, 1.5);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(Tensor::vector({1, 2, 3}).rows() == 1);
    CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
    Tensor n({2});
    n[1] = std::nan("");
    CHECK_FALSE(n.all_finite());
  }

  TEST_CASE("dense_forward matches the triple-loop oracle") {
    Rng rng(11);
    for (auto act : {Activation::identity, Activation::tanh, Activation::sigmoid}) {
      const DenseLayer layer{random_tensor({5, 7}, rng), random_tensor({5}, rng), act};
      const Tensor x = random_tensor({3, 7}, rng, 2.0);
      const Tensor y = dense_forward(layer, x);
      REQUIRE(y.shape() == std::vector<std::size_t>{3, 5});
      const auto oact = act == Activation::identity ? oracle::Act::identity
                        : act == Activation::tanh   ? oracle::Act::tanh
                                                    : oracle::Act::sigmoid;
      for (std::size_t r = 0; r < 3; ++r) {
        std::vector<double> xr(x.data().begin() + static_cast<long>(r * 7), x.data().begin() + static_cast<long>(r * 7 + 7));
        const auto ref = oracle::dense(layer.W.data(), layer.b.data(), xr, 5, 7, oact);
        for (std::size_t c = 0; c < 5; ++c) CHECK(y.at(r, c) == doctest::Approx(ref[c]).epsilon(1e-13));
      }
    }
    const DenseLayer bad{Tensor({2, 3}), Tensor({2}), Activation::identity};
    CHECK_THROWS_AS(dense_forward(bad, Tensor({4})), ShapeError);
    CHECK(dense_forward(bad, Tensor({3})).rank() == 1);
  }

  TEST_CASE("dense_forward trivial layers") {
    Tensor eye({3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    const Tensor x = Tensor::vector({0.5, -2.0, 7.0});
    CHECK(dense_forward(DenseLayer{eye, Tensor({3}), Activation::identity}, x) == x);
    const Tensor zero = dense_forward(DenseLayer{Tensor({2, 3}), Tensor({2}), Activation::tanh}, x);
    for (double v : zero.data()) CHECK(v == 0.0);
  }

  TEST_CASE("lstm_step with all-zero parameters") {
    const std::size_t H = 3;
    const LstmCell cell{Tensor({4 * H, 2}), Tensor({4 * H, H}), Tensor({4 * H}), H};
    const Tensor x = Tensor::vector({1.0, -1.0});
    auto [h0, c0] = lstm_step(cell, x, Tensor({H}), Tensor({H}));
    for (std::size_t k = 0; k < H; ++k) {
      CHECK(h0[k] == 0.0);
      CHECK(c0[k] == 0.0);
    }
    const Tensor c = Tensor::vector({1.0, -3.0, 0.25});
    auto [h1, c1] = lstm_step(cell, x, Tensor({H}), c);
    for (std::size_t k = 0; k < H; ++k) {
      CHECK(c1[k] == doctest::Approx(0.5 * c[k]).epsilon(1e-15));
      CHECK(h1[k] == doctest::Approx(0.5 * std::tanh(0.5 * c[k])).epsilon(1e-15));
    }
  }

  TEST_CASE("lstm_step with zero weights and a constant bias") {
    const std::size_t H = 2;
    LstmCell cell{Tensor({4 * H, 3}), Tensor({4 * H, H}), Tensor({4 * H}), H};
    // Candidate block bias 1, other gates at 0 -> sigmoid 0.5.
    for (std::size_t k = 3 * H; k < 4 * H; ++k) cell.b[k] = 1.0;
    const auto [h, c] = lstm_step(cell, Tensor::vector({0.3, -1.0, 2.0}), Tensor({H}), Tensor::vector({1.0, -1.0}));
    const double g = std::tanh(1.0);
    CHECK(c[0] == doctest::Approx(0.5 * 1.0 + 0.5 * g).epsilon(1e-15));
    CHECK(c[1] == doctest::Approx(0.5 * -1.0 + 0.5 * g).epsilon(1e-15));
    CHECK(h[0] == doctest::Approx(0.5 * std::tanh(0.5 + 0.5 * g)).epsilon(1e-15));
    CHECK(h[1] == doctest::Approx(0.5 * std::tanh(-0.5 + 0.5 * g)).epsilon(1e-15));
    CHECK(sigmoid(0.0) == 0.5);
  }

  TEST_CASE("lstm_step agrees with the scalar oracle and the tape implementation") {
    Rng rng(12);
    const std::size_t H = 4, in = 3, B = 2;
    ParamStore store;
    const LstmBlock block{"lstm", in, H};
    block.init(store, rng);
    const LstmCell cell = block.cell(store);
    const Tensor x = random_tensor({B, in}, rng), h0 = random_tensor({B, H}, rng), c0 = random_tensor({B, H}, rng);
    const auto [h, c] = lstm_step(cell, x, h0, c0);

    Graph g;
    auto [gh, gc] = block.step(g, g.param(store.get("lstm.W_ih")), g.param(store.get("lstm.W_hh")),
                               g.param(store.get("lstm.b")), g.constant(x.matrix()), g.constant(h0.matrix()),
                               g.constant(c0.matrix()));
    for (std::size_t r = 0; r < B; ++r) {
      auto row = [&](const Tensor& t, std::size_t n) {
        return std::vector<double>(t.data().begin() + static_cast<long>(r * n),
                                   t.data().begin() + static_cast<long>(r * n + n));
      };
      const auto ref = oracle::lstm_step(cell.W_ih.data(), cell.W_hh.data(), cell.b.data(), row(x, in), row(h0, H),
                                         row(c0, H), H);
      for (std::size_t k = 0; k < H; ++k) {
        CHECK(std::abs(h.at(r, k) - ref.h[k]) <= 1e-12);
        CHECK(std::abs(c.at(r, k) - ref.c[k]) <= 1e-12);
        CHECK(std::abs(g.value(gh)(static_cast<long>(r), static_cast<long>(k)) - h.at(r, k)) <= 1e-12);
        CHECK(std::abs(g.value(gc)(static_cast<long>(r), static_cast<long>(k)) - c.at(r, k)) <= 1e-12);
      }
    }
  }

  TEST_CASE("backward of a sum is all ones") {
    Parameter p{"p", Tensor({2, 3}, 0.7), Tensor({2, 3})};
    Graph g;
    g.backward(g.sum(g.param(p)));
    for (double v : p.grad.data()) CHECK(v == 1.0);
  }

  TEST_CASE("gradient of |Wx|^2 is 2 (Wx) x^T") {
    Rng rng(13);
    Parameter w{"W", random_tensor({3, 4}, rng), Tensor({3, 4})};
    const Tensor x = random_tensor({1, 4}, rng);
    Graph g;
    g.backward(g.sum(g.square(g.matmul_t(g.constant(x.matrix()), g.param(w)))));
    const Matrix wx = w.value.matrix() * x.matrix().transpose();
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(w.grad.at(i, j) == doctest::Approx(2.0 * wx(static_cast<long>(i), 0) * x[j]).epsilon(1e-13));
  }

  TEST_CASE("backward requires a scalar root") {
    Parameter p{"p", Tensor({2, 2}, 1.0), Tensor({2, 2})};
    Graph g;
    CHECK_THROWS_AS(g.backward(g.param(p)), ShapeError);
    CHECK_THROWS_AS(g.add(g.param(p), g.constant(Matrix::Zero(3, 2))), ShapeError);
  }

  TEST_CASE("tape gradients match central differences for every op") {
    Rng rng(14);
    ParamStore store;
    store.add("a", random_tensor({3, 4}, rng));
    store.add("b", random_tensor({3, 4}, rng));
    store.add("row", random_tensor({4}, rng));
    const LossBuilder build = [](Graph& g, ParamStore& s) {
      Var a = g.param(s.get("a")), b = g.param(s.get("b")), r = g.param(s.get("row"));
      Var x = g.add_row(g.mul(g.tanh(a), g.sigmoid(b)), r);
      Var y = g.sub(g.exp(g.scale(x, 0.3)), g.add_scalar(g.square(a), 0.1));
      const Var parts[] = {g.slice_cols(y, 1, 2), x};
      Var z = g.concat_cols(parts);
      Var m = g.mask(z, Matrix::Constant(3, 6, 0.5));
      return g.add(g.mean(g.row_sum(g.square(m))), g.sum(g.matmul_t(a, b)));
    };
    const auto report = check_gradients(store, build);
    CHECK(report.checked == store.scalar_count());
    CHECK(report.max_rel_error < 1e-6);
  }

  TEST_CASE("Adam step by hand") {
    ParamStore store;
    store.add("w", Tensor::vector({1.0, -2.0}));
    store.get("w").grad = Tensor::vector({2.0, 0.0});
    OptimizerState opt(store);
    opt.step(store);
    // m = 0.1 g, v = 0.001 g^2, bias-corrected to g and g^2.
    CHECK(store.get("w").value[0] == doctest::Approx(1.0 - 1e-3 * 2.0 / (2.0 + 1e-8)).epsilon(1e-15));
    CHECK(store.get("w").value[1] == -2.0);
    CHECK(opt.step_count() == 1);
    store.get("w").grad = Tensor::vector({2.0, 0.0});
    opt.step(store);
    CHECK(store.get("w").value[0] == doctest::Approx(1.0 - 2e-3).epsilon(1e-7));
  }

  TEST_CASE("Adam: unit gradient with lr 0.1, zero gradient, constant gradient") {
    ParamStore store;
    store.add("w", Tensor::vector({0.5}));
    store.get("w").grad = Tensor::vector({1.0});
    OptimizerState opt(store, AdamConfig{0.1, 0.9, 0.999, 1e-8});
    opt.step(store);
    CHECK(store.get("w").value[0] == doctest::Approx(0.5 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));

    ParamStore zero;
    zero.add("w", Tensor::vector({0.5, 1.5}));
    OptimizerState zopt(zero);
    zopt.step(zero);
    CHECK(zero.get("w").value == Tensor::vector({0.5, 1.5}));

    ParamStore mono;
    mono.add("w", Tensor::vector({0.0}));
    OptimizerState mopt(mono);
    double prev = 0.0;
    for (int k = 0; k < 50; ++k) {
      mono.get("w").grad = Tensor::vector({0.3});
      mopt.step(mono);
      CHECK(mono.get("w").value[0] < prev);
      prev = mono.get("w").value[0];
    }
  }

  TEST_CASE("non-finite gradient names the parameter and leaves values untouched") {
    ParamStore store;
    store.add("enc.0.W", Tensor::vector({1.0}));
    store.add("enc.0.b", Tensor::vector({3.0}));
    store.get("enc.0.W").grad = Tensor::vector({1.0});
    store.get("enc.0.b").grad = Tensor::vector({std::nan("")});
    OptimizerState opt(store);
    try {
      opt.step(store);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("enc.0.b") != std::string::npos);
    }
    CHECK(store.get("enc.0.W").value[0] == 1.0);
    CHECK(store.get("enc.0.b").value[0] == 3.0);
  }

  TEST_CASE("gradient clipping") {
    ParamStore store;
    store.add("w", Tensor::vector({0.0, 0.0}));
    store.get("w").grad = Tensor::vector({3.0, 4.0});
    CHECK(clip_grad_norm(store, 1.0) == doctest::Approx(5.0));
    CHECK(store.get("w").grad[0] == doctest::Approx(0.6));
    CHECK(store.get("w").grad[1] == doctest::Approx(0.8));
  }

  TEST_CASE("param store naming and layout") {
    Rng rng(15);
    ParamStore store;
    store.add_uniform("x.W", {4, 9}, 9, rng);
    CHECK_THROWS_AS(store.add("x.W", Tensor({1})), InvalidArgument);
    CHECK_THROWS_AS(store.get("nope"), InvalidArgument);
    for (double v : store.get("x.W").value.data()) CHECK(std::abs(v) <= 1.0 / 3.0);
    ParamStore copy = store;
    CHECK(copy.same_layout(store));
    CHECK(&copy.get("x.W") != &store.get("x.W"));
  }

  TEST_CASE("checkpoint round trip is bit exact") {
    Rng rng(16);
    Checkpoint ck;
    ck.method = "proposed";
    ck.trained = true;
    ck.meta = {{"seed", "42"}, {"note", "a b"}};
    ck.params.add("a", random_tensor({3, 2}, rng));
    ck.params.add("b", Tensor::vector({1e-300, -0.0, 1.0 / 3.0}));
    std::stringstream ss;
    write_checkpoint(ss, ck);
    const Checkpoint back = read_checkpoint(ss);
    CHECK(back.method == "proposed");
    CHECK(back.trained);
    CHECK(back.meta == ck.meta);
    REQUIRE(back.params.same_layout(ck.params));
    for (std::size_t i = 0; i < ck.params.size(); ++i) CHECK(back.params[i].value == ck.params[i].value);

    std::stringstream bad("NOTAMODEL\n");
    CHECK_THROWS_AS(read_checkpoint(bad), FormatError);
    const std::string text = ss.str();
    std::stringstream truncated(text.substr(0, text.size() - 5));
    CHECK_THROWS_AS(read_checkpoint(truncated), FormatError);
  }
}
