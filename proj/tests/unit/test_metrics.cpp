#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "ipred/error.hpp"
#include "ipred/metrics.hpp"

using namespace ipred;
using dc::Tensor;

namespace {

std::vector<Tensor> scalars(std::initializer_list<double> values) {
  std::vector<Tensor> out;
  for (double v : values) out.push_back(Tensor::vector({v}));
  return out;
}

EvalCase make_case(std::string id, std::size_t dims, double fill) {
  EvalCase c;
  c.case_id = std::move(id);
  c.truth = Tensor({dims}, fill);
  return c;
}

// Samples depend only on the seed, so the same case/seed gives the same set.
Predictor noisy(double offset) {
  return [offset](const EvalCase& c, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    PredictionResult r;
    for (std::size_t k = 0; k < n; ++k) {
      Tensor s({c.truth.size()});
      for (double& v : s.data()) v = offset + rng.normal();
      r.samples.push_back(s);
    }
    r.compute_stats();
    return r;
  };
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("mse examples") {
    const Tensor y = Tensor::vector({0.0});
    CHECK(mse(y, scalars({1.0, -1.0})) == 1.0);
    CHECK(mse(Tensor::vector({1.0, 2.0}), std::vector<Tensor>{Tensor::vector({1.0, 2.0})}) == 0.0);
    CHECK_THROWS_AS(mse(y, std::vector<Tensor>{}), InvalidArgument);
    CHECK_THROWS_AS(mse(y, std::vector<Tensor>{Tensor::vector({1.0, 2.0})}), ShapeError);
  }

  TEST_CASE("nll examples") {
    // Samples {-1, 1}: mean 0, population variance 1.
    CHECK(nll(Tensor::vector({0.0}), scalars({-1.0, 1.0})) == 0.0);
    const double e = std::exp(1.0);
    CHECK(nll(Tensor::vector({0.0}), scalars({-e, e})) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(nll(Tensor::vector({1.0}), scalars({-1.0, 1.0})) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(nll(Tensor::vector({0.0}), scalars({1.0})), InvalidArgument);
    // Degenerate samples stay finite through the variance floor.
    const double deg = nll(Tensor::vector({0.0}), scalars({1.0, 1.0}));
    CHECK(std::isfinite(deg));
    CHECK(deg == doctest::Approx(0.5 * std::log(kVarianceFloor) + 1.0 / (2.0 * kVarianceFloor)));
  }

  TEST_CASE("permutation and duplication properties") {
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t dims = 1 + rng.uniform_index(6), n = 2 + rng.uniform_index(8);
      Tensor y({dims});
      for (double& v : y.data()) v = rng.normal();
      std::vector<Tensor> s;
      for (std::size_t k = 0; k < n; ++k) {
        Tensor t({dims});
        for (double& v : t.data()) v = rng.normal(0.0, 2.0);
        s.push_back(t);
      }
      const double m0 = mse(y, s), n0 = nll(y, s);
      CHECK(m0 >= 0.0);
      auto perm = s;
      std::reverse(perm.begin(), perm.end());
      std::swap(perm[0], perm[perm.size() / 2]);
      CHECK(mse(y, perm) == doctest::Approx(m0).epsilon(1e-13));
      CHECK(nll(y, perm) == doctest::Approx(n0).epsilon(1e-12));
      auto dup = s;
      dup.insert(dup.end(), s.begin(), s.end());
      CHECK(mse(y, dup) == doctest::Approx(m0).epsilon(1e-13));
      CHECK(nll(y, dup) == doctest::Approx(n0).epsilon(1e-12));
    }
  }

  TEST_CASE("evaluate on one case equals the direct metrics") {
    const std::vector<EvalCase> cases{make_case("c0", 20, 0.3)};
    const std::vector<NamedPredictor> methods{{"m", noisy(0.0)}};
    const auto report = evaluate(methods, cases, 10, 5);
    REQUIRE(report.methods.size() == 1);
    const auto r = noisy(0.0)(cases[0], 10, case_seed(5, "c0"));
    CHECK(report.at("m").mse_mean == mse(cases[0].truth, r.samples));
    CHECK(report.at("m").nll_mean == nll(cases[0].truth, r.samples));
    CHECK(report.at("m").mse_std == 0.0);
    CHECK(report.case_count == 1);
    CHECK(report.n_samples == 10);
    CHECK_THROWS_AS(report.at("other"), InvalidArgument);
  }

  TEST_CASE("evaluate is invariant to method order and rejects bad input") {
    const std::vector<EvalCase> cases{make_case("a", 4, 0.0), make_case("b", 4, 1.0), make_case("c", 4, -1.0)};
    const std::vector<NamedPredictor> fwd{{"x", noisy(0.0)}, {"y", noisy(2.0)}};
    const std::vector<NamedPredictor> rev{{"y", noisy(2.0)}, {"x", noisy(0.0)}};
    const auto r1 = evaluate(fwd, cases, 8, 3), r2 = evaluate(rev, cases, 8, 3);
    for (const char* m : {"x", "y"}) {
      CHECK(r1.at(m).mse_mean == r2.at(m).mse_mean);
      CHECK(r1.at(m).nll_mean == r2.at(m).nll_mean);
      CHECK(r1.at(m).case_nll == r2.at(m).case_nll);
      CHECK(r1.at(m).mse_std >= 0.0);
    }
    CHECK(r1.methods[0].method == "x");
    CHECK(r2.methods[0].method == "y");
    CHECK_THROWS_AS(evaluate(fwd, std::span<const EvalCase>{}, 8, 3), InvalidArgument);
    const std::vector<NamedPredictor> short_method{
        {"s", [](const EvalCase& c, std::size_t, std::uint64_t s) { return noisy(0.0)(c, 3, s); }}};
    CHECK_THROWS_AS(evaluate(short_method, cases, 8, 3), InvalidArgument);
  }

  TEST_CASE("std is the population std over cases") {
    const std::vector<EvalCase> cases{make_case("a", 1, 0.0), make_case("b", 1, 2.0)};
    // Deterministic pair {-1, 1}: mse is 1 + truth^2.
    const Predictor pm = [](const EvalCase&, std::size_t n, std::uint64_t) {
      PredictionResult r;
      for (std::size_t k = 0; k < n; ++k) r.samples.push_back(Tensor::vector({k % 2 ? 1.0 : -1.0}));
      r.compute_stats();
      return r;
    };
    const std::vector<NamedPredictor> methods{{"pm", pm}};
    const auto r = evaluate(methods, cases, 2, 0);
    CHECK(r.at("pm").mse_mean == 3.0);
    CHECK(r.at("pm").mse_std == 2.0);
    CHECK(r.at("pm").nll_mean == 1.0);
    CHECK(r.at("pm").nll_std == 1.0);
  }

  TEST_CASE("report serialisation") {
    const std::vector<EvalCase> cases{make_case("a", 4, 0.0)};
    const std::vector<NamedPredictor> methods{{"proposed", noisy(0.0)}, {"cvae-noI", noisy(1.0)}};
    auto r = evaluate(methods, cases, 5, 1);
    r.config_digest = "0123456789abcdef";
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["methods"].size() == 2);
    CHECK(j["methods"][0]["method"] == "proposed");
    CHECK(j["config_digest"] == "0123456789abcdef");
    const std::string table = r.to_table();
    CHECK(table.find("proposed") != std::string::npos);
    CHECK(table.find("cvae-noI") != std::string::npos);
    CHECK(table.find("±") != std::string::npos);
  }
}
