#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "ipred/error.hpp"
#include "ipred/intention.hpp"
#include "ipred/rng.hpp"
#include "ipred/synthdata.hpp"
#include "oracles.hpp"

using namespace ipred;

namespace {

IntentionBelief belief(std::vector<double> p, std::string id = "v") {
  std::vector<std::string> h;
  for (std::size_t i = 0; i < p.size(); ++i) h.push_back("h" + std::to_string(i));
  return IntentionBelief{std::move(id), std::move(h), std::move(p), 0.0};
}

std::map<std::string, ReferencePath> by_id(const std::vector<ReferencePath>& paths) {
  std::map<std::string, ReferencePath> m;
  for (const auto& p : paths) m.emplace(p.id(), p);
  return m;
}

IntentionBelief belief_over(const std::string& vehicle, std::vector<std::pair<std::string, double>> entries) {
  IntentionBelief b;
  b.vehicle_id = vehicle;
  for (auto& [h, p] : entries) {
    b.hypotheses.push_back(h);
    b.probs.push_back(p);
  }
  return b;
}

}  // namespace

TEST_SUITE("intention") {
  TEST_CASE("dtw_likelihood softmax examples") {
    const std::vector<double> d0{0.0, 0.0};
    auto p = softmax_neg(d0);
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
    const std::vector<double> d1{0.0, std::log(3.0)};
    p = softmax_neg(d1);
    CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-15));
    const std::vector<double> d2{0.0, 100.0};
    p = softmax_neg(d2);
    const auto ref = oracle::softmax_neg_ld(d2);
    CHECK(p[0] == doctest::Approx(static_cast<double>(ref[0])).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(static_cast<double>(ref[1])).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(3.72e-44).epsilon(1e-2));
    CHECK(p[0] + p[1] == 1.0);
  }

  TEST_CASE("softmax shift invariance and argmax") {
    Rng rng(4);
    for (int k = 0; k < 100; ++k) {
      std::vector<double> d(1 + rng.uniform_index(6));
      for (double& x : d) x = rng.uniform(0.0, 20.0);
      auto shifted = d;
      const double c = rng.uniform(-50.0, 50.0);
      for (double& x : shifted) x += c;
      const auto p = softmax_neg(d), q = softmax_neg(shifted);
      for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-12));
      const auto argmin = std::min_element(d.begin(), d.end()) - d.begin();
      CHECK(std::max_element(p.begin(), p.end()) - p.begin() == argmin);
    }
  }

  TEST_CASE("dtw_likelihood rejects empty candidates and favours the matching segment") {
    const Trajectory h("v", {{0.0, {0, 0}, 1}, {0.2, {1, 0}, 1}, {0.4, {2, 0}, 1}});
    CHECK_THROWS_AS(dtw_likelihood(h, {}), InvalidArgument);
    const std::vector<PathSegment> segs{{"on", 0, 2, {{0, 0}, {1, 0}, {2, 0}}}, {"off", 0, 2, {{0, 3}, {1, 3}, {2, 3}}}};
    const auto p = dtw_likelihood(h, segs);
    CHECK(p[0] > p[1]);
    CHECK(p[0] + p[1] == doctest::Approx(1.0));
  }

  TEST_CASE("bayes_update worked examples") {
    const std::vector<double> l1{0.8, 0.2};
    auto post = bayes_update(belief({0.5, 0.5}), l1);
    CHECK(std::abs(post.probs[0] - 0.8) <= 1e-12);
    CHECK(std::abs(post.probs[1] - 0.2) <= 1e-12);
    const std::vector<double> l2{0.5, 0.5};
    post = bayes_update(belief({0.9, 0.1}), l2);
    CHECK(std::abs(post.probs[0] - 0.9) <= 1e-12);
    CHECK(std::abs(post.probs[1] - 0.1) <= 1e-12);
    const std::vector<double> l3{0.5, 0.4, 0.1};
    post = bayes_update(belief({0.2, 0.3, 0.5}), l3);
    CHECK(std::abs(post.probs[0] - 10.0 / 27.0) <= 1e-12);
    CHECK(std::abs(post.probs[1] - 12.0 / 27.0) <= 1e-12);
    CHECK(std::abs(post.probs[2] - 5.0 / 27.0) <= 1e-12);
  }

  TEST_CASE("bayes_update errors") {
    const std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(bayes_update(belief({0.5, 0.5}), zero), NumericError);
    const std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(bayes_update(belief({0.5, 0.5}), wrong), ShapeError);
    const std::vector<double> disjoint{0.0, 1.0};
    CHECK_THROWS_AS(bayes_update(belief({1.0, 0.0}), disjoint), NumericError);
  }

  TEST_CASE("uniform prior returns the normalised likelihood") {
    Rng rng(8);
    for (int k = 0; k < 100; ++k) {
      const std::size_t n = 2 + rng.uniform_index(6);
      std::vector<double> l(n);
      for (double& x : l) x = rng.uniform(0.01, 1.0);
      const double s = std::accumulate(l.begin(), l.end(), 0.0);
      const auto post = bayes_update(uniform_belief("v", std::vector<std::string>(n, "h"), 0.0), l);
      for (std::size_t i = 0; i < n; ++i) CHECK(post.probs[i] == doctest::Approx(l[i] / s).epsilon(1e-12));
      CHECK_NOTHROW(post.validate());
    }
  }

  TEST_CASE("stationary evidence converges monotonically") {
    auto b = belief({0.25, 0.25, 0.5});
    const std::vector<double> l{0.6, 0.3, 0.1};
    double prev = b.probs[0];
    for (int k = 0; k < 3; ++k) {
      b = bayes_update(b, l);
      CHECK(b.probs[0] > prev);
      prev = b.probs[0];
    }
    // By hand: posterior after k steps is prior * l^k normalised.
    const double w0 = 0.25 * 0.216, w1 = 0.25 * 0.027, w2 = 0.5 * 0.001;
    CHECK(b.probs[0] == doctest::Approx(w0 / (w0 + w1 + w2)).epsilon(1e-12));
  }

  TEST_CASE("tracker cadence: minimum gap of 0.4 s") {
    const auto paths = build_reference_paths(RoundaboutSpec::default_spec());
    const auto cands = candidate_paths(paths, 0);
    std::vector<TrajectorySample> s;
    for (int i = 0; i < 10; ++i) s.push_back({i * 0.2, cands[0].point_at(5.0 * i), 5.0});
    const Trajectory traj("B", s);
    auto state = make_tracker("B", cands, 0.0);
    auto [s1, b1] = track_step(state, traj, 0.2);
    CHECK(b1.probs == state.belief.probs);
    CHECK(b1.last_update_t == 0.0);
    auto [s2, b2] = track_step(s1, traj, 0.4);
    CHECK(b2.last_update_t == doctest::Approx(0.4));
    CHECK_FALSE(s2.last_costs.empty());
    auto [s3, b3] = track_step(s2, traj, 0.6);
    CHECK(b3.probs == b2.probs);
    CHECK(b3.last_update_t == b2.last_update_t);
    CHECK_THROWS(track_step(s3, traj, 0.2));
  }

  TEST_CASE("select_pairs examples") {
    const ReferencePath p1("p1", 0, 1, {{0, 0}, {10, 0}});
    const ReferencePath p2("p2", 0, 1, {{0, 10}, {10, 10}});
    const ReferencePath x1("x1", 0, 1, {{0, -5}, {10, 15}});
    const std::map<std::string, ReferencePath> table{{"p1", p1}, {"p2", p2}, {"x1", x1}};

    const IntentionBelief parallel[] = {belief_over("A", {{"p1", 1.0}}), belief_over("B", {{"p2", 1.0}})};
    CHECK(select_pairs(parallel, table).empty());

    // x1 crosses both p1 and p2; p1 and p2 are parallel.
    const IntentionBelief three[] = {belief_over("C", {{"p2", 1.0}}), belief_over("A", {{"p1", 1.0}}),
                                     belief_over("B", {{"x1", 1.0}})};
    const auto pairs = select_pairs(three, table);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].vehicle_a == "A");
    CHECK(pairs[0].vehicle_b == "B");
    CHECK(pairs[1].vehicle_a == "B");
    CHECK(pairs[1].vehicle_b == "C");

    // Exhaustive pairwise oracle over the same input, any order.
    const IntentionBelief reordered[] = {three[2], three[0], three[1]};
    CHECK(select_pairs(reordered, table) == pairs);

    // Paths below the threshold are ignored.
    const IntentionBelief weak[] = {belief_over("A", {{"p1", 0.97}, {"x1", 0.03}}), belief_over("B", {{"p2", 1.0}})};
    CHECK(select_pairs(weak, table, 0.05).empty());
    CHECK(select_pairs(weak, table, 0.02).size() == 1);
    CHECK_THROWS_AS(select_pairs(weak, table, 0.0), InvalidArgument);
  }

  TEST_CASE("select_pairs: car A waiting, car B circulating past A's branch") {
    const auto paths = build_reference_paths(RoundaboutSpec::default_spec());
    const auto table = by_id(paths);
    // A waits at branch 2; B entered at branch 0 and may leave at 2, 4 or 6.
    std::vector<std::pair<std::string, double>> a, b;
    for (const auto& p : candidate_paths(paths, 2)) a.emplace_back(p.id(), 0.0);
    for (const auto& p : candidate_paths(paths, 0)) b.emplace_back(p.id(), 0.0);
    for (auto& e : a) e.second = 1.0 / static_cast<double>(a.size());
    for (auto& e : b) e.second = 1.0 / static_cast<double>(b.size());
    const IntentionBelief beliefs[] = {belief_over("A", a), belief_over("B", b)};
    const auto pairs = select_pairs(beliefs, table);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].vehicle_a == "A");
    CHECK(pairs[0].vehicle_b == "B");
  }

  TEST_CASE("map_belief_to_branches") {
    const auto paths = build_reference_paths(RoundaboutSpec::default_spec());
    const auto table = by_id(paths);
    // Entry 1 has paths to 3, 5 and 7.
    auto b = belief_over("B", {{"e1x3", 0.2}, {"e1x5", 0.3}, {"e1x7", 0.5}});
    auto m = map_belief_to_branches(b, table, 1);
    CHECK(m.probs[3] == 0.2);
    CHECK(m.probs[5] == 0.3);
    CHECK(m.probs[7] == 0.5);
    CHECK(m.probs[0] == 0.0);
    CHECK_NOTHROW(m.validate());
    CHECK_THROWS_AS(map_belief_to_branches(b, table, 2), InvalidArgument);

    const std::map<std::string, ReferencePath> dup{
        {"a", ReferencePath("a", 0, 3, {{0, 0}, {1, 0}})}, {"b", ReferencePath("b", 0, 3, {{0, 1}, {1, 1}})}};
    m = map_belief_to_branches(belief_over("v", {{"a", 0.2}, {"b", 0.3}}), dup, 0);
    CHECK(m.probs[3] == doctest::Approx(0.5));
  }

  TEST_CASE("map_belief_to_branches over the full table is proportional to path counts") {
    const auto paths = build_reference_paths(RoundaboutSpec::default_spec());
    const auto table = by_id(paths);
    for (int entry = 0; entry < kBranchCount; ++entry) {
      const auto cands = candidate_paths(paths, entry);
      std::vector<std::string> ids;
      for (const auto& p : cands) ids.push_back(p.id());
      const auto m = map_belief_to_branches(uniform_belief("v", ids, 0.0), table, entry);
      std::array<int, kBranchCount> counts{};
      for (const auto& p : cands) ++counts[static_cast<std::size_t>(p.exit_branch())];
      for (int x = 0; x < kBranchCount; ++x)
        CHECK(m.probs[static_cast<std::size_t>(x)] ==
              doctest::Approx(static_cast<double>(counts[static_cast<std::size_t>(x)]) /
                              static_cast<double>(cands.size())));
    }
  }

  TEST_CASE("one-hot") {
    const IntentionOneHot c(3);
    const auto v = c.values();
    CHECK(std::accumulate(v.begin(), v.end(), 0.0) == 1.0);
    CHECK(v[3] == 1.0);
    CHECK_THROWS_AS(IntentionOneHot(8), InvalidArgument);
    CHECK_THROWS_AS(IntentionOneHot(-1), InvalidArgument);
  }
}
