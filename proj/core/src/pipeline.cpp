#include "ipred/pipeline.hpp"

#include <limits>
#include <map>

#include "ipred/error.hpp"

namespace ipred {

BeliefTrace track_vehicle(const Trajectory& traj, std::span<const ReferencePath> paths, TrackerConfig config) {
  BeliefTrace out;
  out.vehicle_id = traj.agent_id();
  out.entry_branch = infer_entry_branch(traj, paths);
  auto candidates = candidate_paths(paths, out.entry_branch);
  std::map<std::string, ReferencePath> by_id;
  for (const auto& p : candidates) by_id.emplace(p.id(), p);

  TrackerState state = make_tracker(traj.agent_id(), std::move(candidates), traj[0].t, config);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double now = traj[i].t;
    auto [next, belief] = track_step(state, traj.slice_time(traj[0].t, now), now);
    state = std::move(next);
    out.t.push_back(now);
    out.branch_beliefs.push_back(map_belief_to_branches(belief, by_id, out.entry_branch));
    out.path_beliefs.push_back(std::move(belief));
  }
  return out;
}

std::vector<int> plausible_branches(const IntentionBelief& branch_belief, double threshold) {
  std::vector<int> out;
  for (int b = 0; b < kBranchCount; ++b)
    for (std::size_t i = 0; i < branch_belief.hypotheses.size(); ++i)
      if (branch_belief.hypotheses[i] == branch_hypothesis(b) && branch_belief.probs[i] >= threshold) out.push_back(b);
  return out;
}

std::optional<EvalCase> make_bimodal_case(const Episode& ep, const RoundaboutSpec& spec,
                                          std::span<const ReferencePath> paths, std::size_t t1, std::size_t t2) {
  const auto end = bimodal_window_end(ep, spec, t1, t2);
  if (!end) return std::nullopt;

  const Trajectory observed(ep.car_b.agent_id(),
                            std::vector<TrajectorySample>(ep.car_b.samples().begin(),
                                                          ep.car_b.samples().begin() + static_cast<std::ptrdiff_t>(*end + 1)));
  const BeliefTrace trace = track_vehicle(observed, paths);
  const IntentionBelief& belief = trace.branch_beliefs.back();
  const int argmax = static_cast<int>(belief.argmax());  // hypotheses are branch0..branch7 in order

  const Normalizer norm = spec.normalizer();
  EvalCase c;
  c.case_id = ep.case_id;
  c.t = ep.car_b[*end].t;
  c.end_index = *end;
  c.fv = make_features(ep.car_a, ep.car_b, ep.front_a, ep.front_b, *end, t1, IntentionOneHot(argmax), norm);
  c.plausible = plausible_branches(belief);
  if (c.plausible.empty()) c.plausible.push_back(argmax);
  c.truth = make_future(ep.car_a, ep.car_b, *end, t2, Normalizer{{0.0, 0.0}, 1.0});
  c.b_entry = ep.b_entry;
  c.b_exit = ep.b_exit;
  c.a_branch = ep.a_entry;
  c.label = ep.label;
  return c;
}

std::vector<EvalCase> bimodal_test_set(const Dataset& ds, std::size_t t1, std::size_t t2) {
  const auto paths = build_reference_paths(ds.spec);
  std::vector<EvalCase> out;
  for (std::size_t id : ds.test_ids)
    if (auto c = make_bimodal_case(ds.episodes.at(id), ds.spec, paths, t1, t2)) out.push_back(std::move(*c));
  return out;
}

bool predicts_exit(const dc::Tensor& sample_world, std::span<const ReferencePath> b_candidates, int a_branch) {
  if (b_candidates.empty()) throw InvalidArgument("predicts_exit: no candidate paths");
  if (sample_world.size() % kJointFeatures != 0) throw ShapeError("predicts_exit: sample is not a joint future");
  const std::size_t steps = sample_world.size() / kJointFeatures;
  double best = std::numeric_limits<double>::infinity();
  const ReferencePath* nearest = nullptr;
  for (const auto& p : b_candidates) {
    double total = 0.0;
    for (std::size_t k = 0; k < steps; ++k)
      total += point_polyline_distance({sample_world[k * 4 + 2], sample_world[k * 4 + 3]}, p.polyline());
    if (total < best) {
      best = total;
      nearest = &p;
    }
  }
  return nearest->exit_branch() == a_branch;
}

}  // namespace ipred
