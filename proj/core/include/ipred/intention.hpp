#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ipred/geometry.hpp"

namespace ipred {

inline constexpr int kBranchCount = 8;

// Probability vector over named hypotheses (reference-path ids, or exit
// branches after map_belief_to_branches).
struct IntentionBelief {
  std::string vehicle_id;
  std::vector<std::string> hypotheses;
  std::vector<double> probs;
  double last_update_t = 0.0;

  std::size_t argmax() const;
  // Throws unless probs are >= 0 and sum to 1 within 1e-9.
  void validate() const;
};

// Uniform belief over the given hypotheses.
IntentionBelief uniform_belief(std::string vehicle_id, std::vector<std::string> hypotheses, double t);

// One-hot exit-branch encoding used as the CVAE condition.
class IntentionOneHot {
 public:
  explicit IntentionOneHot(int branch);
  int branch() const { return branch_; }
  std::array<double, kBranchCount> values() const;

  friend bool operator==(const IntentionOneHot&, const IntentionOneHot&) = default;

 private:
  int branch_;
};

struct InteractionPair {
  std::string vehicle_a;
  std::string vehicle_b;
  std::vector<std::pair<std::string, std::string>> crossing_paths;

  friend bool operator==(const InteractionPair&, const InteractionPair&) = default;
};

// exp(-costs) normalised, with the max exponent subtracted first.
std::vector<double> softmax_neg(std::span<const double> costs);

// DTW-softmax likelihood of the observed track under each candidate segment.
std::vector<double> dtw_likelihood(const Trajectory& h, std::span<const PathSegment> candidates);

// posterior_i = likelihood_i * prior_i / sum_j likelihood_j * prior_j
IntentionBelief bayes_update(const IntentionBelief& prior, std::span<const double> likelihood);

struct TrackerConfig {
  double min_update_gap = 0.4;  // seconds between Bayesian updates
  double segment_margin = 0.0;  // meters added around the projected span
  // Posterior entries are floored at this value (then renormalised) so a
  // hypothesis driven to ~0 can recover when evidence changes.
  double belief_floor = 1e-9;
};

// Per-vehicle tracker state. Copyable value; track_step returns a new state
// so readers can keep snapshots while a writer advances.
struct TrackerState {
  std::shared_ptr<const std::vector<ReferencePath>> candidates;
  IntentionBelief belief;
  TrackerConfig config;
  // DTW costs from the most recent update (empty before the first one).
  std::vector<double> last_costs;
};

// Uniform prior over the candidate paths, anchored at time t0.
TrackerState make_tracker(std::string vehicle_id, std::vector<ReferencePath> candidates, double t0,
                          TrackerConfig config = {});

// Runs a DTW + Bayes update when now - last_update_t >= min_update_gap,
// using the part of `observed` in [last_update_t, now] as evidence.
// Otherwise returns the belief unchanged.
std::pair<TrackerState, IntentionBelief> track_step(const TrackerState& state, const Trajectory& observed,
                                                    double now);

// Entry branch of the path whose polyline lies closest to the first
// observed position.
int infer_entry_branch(const Trajectory& traj, std::span<const ReferencePath> paths);

// Paths whose entry branch equals `entry_branch`, in table order.
std::vector<ReferencePath> candidate_paths(std::span<const ReferencePath> paths, int entry_branch);

// Unordered vehicle pairs whose plausible paths (posterior >= prob_threshold)
// cross. Output sorted by (vehicle_a, vehicle_b) with vehicle_a < vehicle_b.
std::vector<InteractionPair> select_pairs(std::span<const IntentionBelief> beliefs,
                                          const std::map<std::string, ReferencePath>& paths,
                                          double prob_threshold = 0.05,
                                          double tol = kDefaultCrossTolerance);

// Collapses a path-level belief into an 8-way exit-branch belief.
IntentionBelief map_belief_to_branches(const IntentionBelief& belief,
                                       const std::map<std::string, ReferencePath>& paths, int entry_lane);

std::string branch_hypothesis(int branch);

}  // namespace ipred
