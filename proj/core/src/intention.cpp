#include "ipred/intention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ipred/dtw.hpp"
#include "ipred/error.hpp"

namespace ipred {

std::size_t IntentionBelief::argmax() const {
  if (probs.empty()) throw InvalidArgument("argmax of empty belief");
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

void IntentionBelief::validate() const {
  if (probs.size() != hypotheses.size()) throw InvalidArgument("belief hypotheses/probs size mismatch");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw NumericError("belief of '" + vehicle_id + "' has a negative or NaN entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw NumericError("belief of '" + vehicle_id + "' does not sum to 1");
}

IntentionBelief uniform_belief(std::string vehicle_id, std::vector<std::string> hypotheses, double t) {
  if (hypotheses.empty()) throw InvalidArgument("uniform_belief: no hypotheses");
  const double p = 1.0 / static_cast<double>(hypotheses.size());
  std::vector<double> probs(hypotheses.size(), p);
  return IntentionBelief{std::move(vehicle_id), std::move(hypotheses), std::move(probs), t};
}

IntentionOneHot::IntentionOneHot(int branch) : branch_(branch) {
  if (branch < 0 || branch >= kBranchCount) throw InvalidArgument("intention branch out of range 0..7");
}

std::array<double, kBranchCount> IntentionOneHot::values() const {
  std::array<double, kBranchCount> v{};
  v[static_cast<std::size_t>(branch_)] = 1.0;
  return v;
}

std::string branch_hypothesis(int branch) { return "branch" + std::to_string(branch); }

std::vector<double> softmax_neg(std::span<const double> costs) {
  if (costs.empty()) throw InvalidArgument("softmax over an empty vector");
  const double lo = *std::min_element(costs.begin(), costs.end());
  std::vector<double> out(costs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    out[i] = std::exp(-(costs[i] - lo));
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> dtw_likelihood(const Trajectory& h, std::span<const PathSegment> candidates) {
  if (candidates.empty()) throw InvalidArgument("dtw_likelihood: no candidate segments");
  const auto observed = h.positions();
  std::vector<double> costs;
  costs.reserve(candidates.size());
  for (const auto& c : candidates) costs.push_back(dtw_cost(observed, c.polyline));
  return softmax_neg(costs);
}

IntentionBelief bayes_update(const IntentionBelief& prior, std::span<const double> likelihood) {
  if (likelihood.size() != prior.probs.size())
    throw ShapeError("bayes_update: likelihood has " + std::to_string(likelihood.size()) + " entries, prior has " +
                     std::to_string(prior.probs.size()));
  IntentionBelief post = prior;
  double norm_sum = 0.0;
  for (std::size_t i = 0; i < likelihood.size(); ++i) {
    if (!(likelihood[i] >= 0.0)) throw InvalidArgument("bayes_update: negative or NaN likelihood");
    post.probs[i] = likelihood[i] * prior.probs[i];
    norm_sum += post.probs[i];
  }
  if (!(norm_sum > 0.0)) throw NumericError("bayes_update: contradictory evidence (all-zero posterior)");
  for (double& p : post.probs) p /= norm_sum;
  return post;
}

TrackerState make_tracker(std::string vehicle_id, std::vector<ReferencePath> candidates, double t0,
                          TrackerConfig config) {
  if (candidates.empty()) throw InvalidArgument("tracker for '" + vehicle_id + "' has no candidate paths");
  std::vector<std::string> ids;
  ids.reserve(candidates.size());
  for (const auto& p : candidates) ids.push_back(p.id());
  TrackerState st;
  st.belief = uniform_belief(std::move(vehicle_id), std::move(ids), t0);
  st.candidates = std::make_shared<const std::vector<ReferencePath>>(std::move(candidates));
  st.config = config;
  return st;
}

std::pair<TrackerState, IntentionBelief> track_step(const TrackerState& state, const Trajectory& observed,
                                                    double now) {
  if (now < state.belief.last_update_t - 1e-9)
    throw InvalidArgument("track_step: time went backwards for '" + state.belief.vehicle_id + "'");
  if (now - state.belief.last_update_t < state.config.min_update_gap - 1e-9) return {state, state.belief};

  const Trajectory h = observed.slice_time(state.belief.last_update_t, now);
  const std::size_t count = std::max<std::size_t>(2, h.size());
  std::vector<PathSegment> segments;
  segments.reserve(state.candidates->size());
  for (const auto& path : *state.candidates) {
    PathSegment seg = nearest_segment(path, h, state.config.segment_margin);
    seg.polyline = resample_polyline(seg.polyline, count);
    segments.push_back(std::move(seg));
  }

  const auto positions = h.positions();
  std::vector<double> costs;
  costs.reserve(segments.size());
  for (const auto& seg : segments) costs.push_back(dtw_cost(positions, seg.polyline));

  IntentionBelief post = bayes_update(state.belief, softmax_neg(costs));
  if (state.config.belief_floor > 0.0) {
    double sum = 0.0;
    for (double& p : post.probs) sum += (p = std::max(p, state.config.belief_floor));
    for (double& p : post.probs) p /= sum;
  }
  post.last_update_t = now;

  TrackerState next = state;
  next.belief = post;
  next.last_costs = std::move(costs);
  return {std::move(next), std::move(post)};
}

int infer_entry_branch(const Trajectory& traj, std::span<const ReferencePath> paths) {
  if (paths.empty()) throw InvalidArgument("infer_entry_branch: empty path table");
  const Point2 p = traj.front().pos;
  double best = std::numeric_limits<double>::infinity();
  int branch = -1;
  for (const auto& path : paths) {
    // Distance to the path's start measured along the polyline so that
    // vehicles first seen on the ring still resolve to an entry whose
    // path passes through them.
    const auto proj = path.project(p);
    const double score = proj.distance + 1e-3 * proj.s;
    if (score < best) {
      best = score;
      branch = path.entry_branch();
    }
  }
  return branch;
}

std::vector<ReferencePath> candidate_paths(std::span<const ReferencePath> paths, int entry_branch) {
  std::vector<ReferencePath> out;
  for (const auto& p : paths)
    if (p.entry_branch() == entry_branch) out.push_back(p);
  return out;
}

std::vector<InteractionPair> select_pairs(std::span<const IntentionBelief> beliefs,
                                          const std::map<std::string, ReferencePath>& paths, double prob_threshold,
                                          double tol) {
  if (!(prob_threshold > 0.0 && prob_threshold < 1.0))
    throw InvalidArgument("select_pairs: prob_threshold must lie in (0, 1)");

  auto plausible = [&](const IntentionBelief& b) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < b.probs.size(); ++i)
      if (b.probs[i] >= prob_threshold) ids.push_back(b.hypotheses[i]);
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  auto lookup = [&](const std::string& id) -> const ReferencePath& {
    auto it = paths.find(id);
    if (it == paths.end()) throw InvalidArgument("select_pairs: unknown path id '" + id + "'");
    return it->second;
  };

  std::vector<const IntentionBelief*> order;
  for (const auto& b : beliefs) order.push_back(&b);
  std::sort(order.begin(), order.end(),
            [](const IntentionBelief* x, const IntentionBelief* y) { return x->vehicle_id < y->vehicle_id; });

  std::vector<InteractionPair> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto cand_a = plausible(*order[i]);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (order[i]->vehicle_id == order[j]->vehicle_id) continue;
      const auto cand_b = plausible(*order[j]);
      InteractionPair pair{order[i]->vehicle_id, order[j]->vehicle_id, {}};
      for (const auto& pa : cand_a)
        for (const auto& pb : cand_b)
          if (paths_cross(lookup(pa), lookup(pb), tol)) pair.crossing_paths.emplace_back(pa, pb);
      if (!pair.crossing_paths.empty()) out.push_back(std::move(pair));
    }
  }
  return out;
}

IntentionBelief map_belief_to_branches(const IntentionBelief& belief,
                                       const std::map<std::string, ReferencePath>& paths, int entry_lane) {
  IntentionBelief out;
  out.vehicle_id = belief.vehicle_id;
  out.last_update_t = belief.last_update_t;
  out.probs.assign(kBranchCount, 0.0);
  for (int b = 0; b < kBranchCount; ++b) out.hypotheses.push_back(branch_hypothesis(b));
  for (std::size_t i = 0; i < belief.hypotheses.size(); ++i) {
    auto it = paths.find(belief.hypotheses[i]);
    if (it == paths.end())
      throw InvalidArgument("map_belief_to_branches: unknown path id '" + belief.hypotheses[i] + "'");
    if (it->second.entry_branch() != entry_lane)
      throw InvalidArgument("map_belief_to_branches: path '" + it->first + "' does not start on entry lane " +
                            std::to_string(entry_lane));
    out.probs[static_cast<std::size_t>(it->second.exit_branch())] += belief.probs[i];
  }
  return out;
}

}  // namespace ipred
