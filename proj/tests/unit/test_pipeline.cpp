#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ipred/pipeline.hpp"

using namespace ipred;

TEST_SUITE("pipeline") {
  TEST_CASE("tracked beliefs are valid and change only at 0.4 s gaps") {
    const auto spec = RoundaboutSpec::default_spec();
    const auto paths = build_reference_paths(spec);
    const Episode ep = generate_episode(spec, ScenarioParams{}, 3);
    const auto trace = track_vehicle(ep.car_b, paths);
    CHECK(trace.entry_branch == ep.b_entry);
    REQUIRE(trace.t.size() == ep.car_b.size());
    double last_change = trace.t[0];
    for (std::size_t i = 0; i < trace.t.size(); ++i) {
      const auto& pb = trace.path_beliefs[i];
      CHECK(std::accumulate(pb.probs.begin(), pb.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK_NOTHROW(trace.branch_beliefs[i].validate());
      if (i > 0 && pb.probs != trace.path_beliefs[i - 1].probs) {
        CHECK(trace.t[i] - last_change >= 0.4 - 1e-9);
        last_change = trace.t[i];
      }
    }
    // B's true exit has the highest belief at the end of the episode.
    CHECK(trace.branch_beliefs.back().argmax() == static_cast<std::size_t>(ep.b_exit));
  }

  TEST_CASE("plausible branches") {
    IntentionBelief b;
    for (int k = 0; k < kBranchCount; ++k) b.hypotheses.push_back(branch_hypothesis(k));
    b.probs = {0.0, 0.5, 0.0, 0.04, 0.0, 0.46, 0.0, 0.0};
    CHECK(plausible_branches(b) == std::vector<int>{1, 5});
    CHECK(plausible_branches(b, 0.01) == std::vector<int>{1, 3, 5});
  }

  TEST_CASE("bimodal cases are taken before B leaves at A's branch") {
    const auto spec = RoundaboutSpec::default_spec();
    const auto ds = generate_dataset(spec, ScenarioParams{}, 40, 0.5, 17);
    const auto cases = bimodal_test_set(ds, 5, 5);
    CHECK(cases.size() > 5);
    const auto paths = build_reference_paths(spec);
    for (const auto& c : cases) {
      const Episode* ep = nullptr;
      for (const auto& e : ds.episodes)
        if (e.case_id == c.case_id) ep = &e;
      REQUIRE(ep != nullptr);
      CHECK(c.t <= ep->t_b_diverge + 1e-9);
      CHECK(c.truth.size() == 20);
      CHECK(c.a_branch == ep->a_entry);
      CHECK_FALSE(c.plausible.empty());
      // The truth itself is classified into the right mode.
      const auto cands = candidate_paths(paths, c.b_entry);
      dc::Tensor truth = c.truth;
      CHECK(predicts_exit(truth, cands, c.a_branch) == (c.b_exit == c.a_branch));
    }
  }
}
