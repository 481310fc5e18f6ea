#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipred/features.hpp"
#include "ipred/intention.hpp"
#include "ipred/synthdata.hpp"

namespace ipred {

// Belief of one vehicle after each observed sample.
struct BeliefTrace {
  std::string vehicle_id;
  int entry_branch = 0;
  std::vector<double> t;
  std::vector<IntentionBelief> path_beliefs;    // over reference-path ids
  std::vector<IntentionBelief> branch_beliefs;  // over exit branches
};

// Runs the intention tracker along `traj`, feeding it the history observed
// up to each sample.
BeliefTrace track_vehicle(const Trajectory& traj, std::span<const ReferencePath> paths, TrackerConfig config = {});

// Exit branches with probability >= threshold, ascending.
std::vector<int> plausible_branches(const IntentionBelief& branch_belief, double threshold = 0.05);

// A test window scored in world coordinates.
struct EvalCase {
  std::string case_id;
  double t = 0.0;
  std::size_t end_index = 0;
  FeatureVector fv;  // intention = tracker argmax for B
  std::vector<int> plausible;
  dc::Tensor truth;  // [T2 * 4] in meters
  int b_entry = 0;
  int b_exit = 0;
  int a_branch = 0;
  Negotiation label = Negotiation::pass;
};

// The episode's bimodal window (see bimodal_window_end) with tracker-derived
// conditioning, or nullopt.
std::optional<EvalCase> make_bimodal_case(const Episode& ep, const RoundaboutSpec& spec,
                                          std::span<const ReferencePath> paths, std::size_t t1, std::size_t t2);

std::vector<EvalCase> bimodal_test_set(const Dataset& ds, std::size_t t1, std::size_t t2);

// Behavior mode of one predicted joint future (world units): true when B's
// predicted positions lie nearest a path that leaves at `a_branch`.
bool predicts_exit(const dc::Tensor& sample_world, std::span<const ReferencePath> b_candidates, int a_branch);

}  // namespace ipred
