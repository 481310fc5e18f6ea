#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ipred/features.hpp"
#include "ipred/geometry.hpp"

namespace ipred {

// Single-lane roundabout, counter-clockwise circulation. Each branch k has
// an axis at branch_angles[k]; its entry lane runs on the counter-clockwise
// side of the axis and merges onto the ring entry_offset meters (along the
// ring) past the axis, its exit lane leaves the ring exit_offset meters
// before the axis on the clockwise side.
struct RoundaboutSpec {
  Point2 center{0.0, 0.0};
  double ring_radius = 18.0;
  int branch_count = 8;
  std::vector<double> branch_angles;  // radians, strictly increasing in [0, 2pi)
  double entry_offset = 4.5;          // meters along the ring
  double exit_offset = 4.5;           // meters along the ring
  double lane_offset = 2.0;           // lateral lane offset from the branch axis
  double junction_gap = 6.0;          // lanes start this far outside the ring
  double approach_length = 40.0;      // straight entry/exit lane length
  double vertex_spacing = 0.5;
  std::vector<std::pair<int, int>> routes;  // (entry, exit) branches

  // 8 branches every 45 degrees and 19 routes.
  static RoundaboutSpec default_spec();
  void validate() const;
  Normalizer normalizer() const { return Normalizer{center, ring_radius}; }
};

// Arc-length landmarks along one reference path.
struct PathLayout {
  ReferencePath path;
  double s_yield = 0.0;      // end of the straight entry lane
  double s_merge = 0.0;      // joins the ring
  double s_diverge = 0.0;    // leaves the ring
  double s_exit_lane = 0.0;  // start of the straight exit lane (pre-exit point)
};

PathLayout build_path_layout(const RoundaboutSpec& spec, int entry, int exit);
std::vector<ReferencePath> build_reference_paths(const RoundaboutSpec& spec);
std::vector<PathLayout> build_path_layouts(const RoundaboutSpec& spec);
std::string path_id(int entry, int exit);

enum class Negotiation { pass, yield };  // pass: B traverses the conflict point first
const char* to_string(Negotiation n);
Negotiation negotiation_from_string(const std::string& s);

struct ScenarioParams {
  double speed_min = 3.0;
  double speed_max = 9.0;
  double noise_sigma = 0.1;
  double pass_prob = 0.5;
  // Probability that B leaves at A's branch, i.e. before reaching A.
  double exit_before_prob = 0.5;
  std::vector<int> a_branches{0, 1, 2, 3, 4, 5, 6, 7};
  double duration_min = 8.0;
  double duration_max = 15.0;
  double headway_min = 1.5;
  double headway_max = 3.0;
  int smooth_window = 3;

  std::optional<int> force_a_branch;
  std::optional<int> force_b_exit;
  std::optional<Negotiation> force_label;

  void validate() const;
};

inline constexpr double kEpisodeDt = 0.2;
inline constexpr double kSimDt = 0.1;

struct Episode {
  std::string case_id;
  std::uint64_t seed = 0;
  double dt = kEpisodeDt;
  Trajectory car_a{"A", {{0.0, {}, 0.0}}};
  Trajectory car_b{"B", {{0.0, {}, 0.0}}};
  std::optional<Trajectory> front_a;
  std::optional<Trajectory> front_b;
  int a_entry = 0;
  int a_exit = 0;
  int b_entry = 0;
  int b_exit = 0;
  Negotiation label = Negotiation::pass;
  bool interacting = false;  // B's path crosses A's
  // Event times in seconds (NaN when the event does not happen).
  double t_b_diverge = 0.0;   // B reaches the ring point where A's-branch exit leaves
  double t_b_pre_exit = 0.0;  // B reaches the start of its exit lane
  double t_b_conflict = 0.0;  // B reaches A's merge point
  double t_a_conflict = 0.0;  // A reaches its merge point
};

Episode generate_episode(const RoundaboutSpec& spec, const ScenarioParams& params, std::uint64_t seed,
                         std::string case_id = "case");

struct Dataset {
  RoundaboutSpec spec;
  ScenarioParams params;
  std::uint64_t seed = 0;
  double split_ratio = 0.8;
  std::vector<Episode> episodes;
  std::vector<std::size_t> train_ids;  // indices into episodes
  std::vector<std::size_t> test_ids;
};

inline constexpr std::size_t kMinCases = 10;

Dataset generate_dataset(const RoundaboutSpec& spec, const ScenarioParams& params, std::size_t n_cases,
                         double split_ratio, std::uint64_t seed);

// All (T1 past, T2 future) windows of one episode with B's true exit as the
// intention. Returns nothing (and logs a warning) when the episode is
// shorter than T1 + T2 samples.
std::vector<WindowExample> extract_windows(const Episode& ep, const Normalizer& norm, std::size_t t1, std::size_t t2);

std::vector<WindowExample> extract_windows(const Dataset& ds, const std::vector<std::size_t>& ids, std::size_t t1,
                                           std::size_t t2);

// End index of the window whose present is the last sample before B leaves
// the ring at A's branch, provided the two continuations (exit there vs stay
// on the ring) are at least `min_separation` meters apart at the horizon
// end. nullopt when the episode has no such window.
std::optional<std::size_t> bimodal_window_end(const Episode& ep, const RoundaboutSpec& spec, std::size_t t1,
                                              std::size_t t2, double min_separation = 1.0);

}  // namespace ipred
