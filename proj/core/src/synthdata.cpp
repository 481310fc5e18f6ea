#include "ipred/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <spdlog/spdlog.h>

#include "ipred/error.hpp"
#include "ipred/rng.hpp"

namespace ipred {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

int wrap_branch(int b, int n) { return ((b % n) + n) % n; }

Point2 unit(double theta) { return {std::cos(theta), std::sin(theta)}; }
Point2 ccw_tangent(double theta) { return {-std::sin(theta), std::cos(theta)}; }

void append_dense(std::vector<Point2>& out, const std::vector<Point2>& piece) {
  for (const auto& p : piece)
    if (out.empty() || distance(out.back(), p) > 1e-9) out.push_back(p);
}

std::vector<Point2> line_piece(Point2 a, Point2 b, double step) {
  const auto n = static_cast<std::size_t>(std::ceil(distance(a, b) / step));
  std::vector<Point2> out;
  for (std::size_t i = 0; i <= n; ++i) {
    const double f = n == 0 ? 0.0 : static_cast<double>(i) / static_cast<double>(n);
    out.push_back(a + f * (b - a));
  }
  return out;
}

// Cubic Hermite from p0 (unit direction d0) to p1 (unit direction d1).
std::vector<Point2> hermite_piece(Point2 p0, Point2 d0, Point2 p1, Point2 d1, double step) {
  const double chord = distance(p0, p1);
  const Point2 m0 = chord * d0;
  const Point2 m1 = chord * d1;
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * chord / step));
  std::vector<Point2> out;
  for (std::size_t i = 0; i <= n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n);
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    out.push_back(h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1);
  }
  return out;
}

std::vector<Point2> ring_piece(Point2 c, double r, double from, double sweep, double step) {
  const auto n = static_cast<std::size_t>(std::ceil(r * sweep / step));
  std::vector<Point2> out;
  for (std::size_t i = 0; i <= n; ++i) {
    const double a = from + sweep * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n, 1));
    out.push_back(c + r * unit(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kinematics on a fine time grid.

constexpr double kFineDt = 0.01;

struct Motion {
  std::vector<double> t;
  std::vector<double> s;
  std::vector<double> v;

  // First time s reaches target (linear interpolation), NaN if never.
  double time_at(double target) const {
    if (s.front() >= target) return t.front();
    for (std::size_t i = 1; i < s.size(); ++i)
      if (s[i] >= target) {
        const double f = (target - s[i - 1]) / (s[i] - s[i - 1]);
        return t[i - 1] + f * (t[i] - t[i - 1]);
      }
    return kNaN;
  }
};

Motion integrate(const std::function<double(double)>& speed, double s0, double t_end, double s_max) {
  Motion m;
  const auto n = static_cast<std::size_t>(std::llround(t_end / kFineDt));
  m.t.reserve(n + 1);
  m.s.reserve(n + 1);
  m.v.reserve(n + 1);
  double s = s0;
  double v_prev = std::max(0.0, speed(0.0));
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * kFineDt;
    const double v = std::max(0.0, speed(t));
    if (i > 0) s += 0.5 * (v + v_prev) * kFineDt;
    const bool parked = s >= s_max;
    m.t.push_back(t);
    m.s.push_back(std::min(s, s_max));
    m.v.push_back(parked ? 0.0 : v);
    v_prev = v;
  }
  return m;
}

struct Dip {
  double center = 0.0;
  double half_width = 1.0;
  double depth = 0.0;

  // Raised-cosine speed reduction; its time integral is depth * half_width.
  double operator()(double t) const {
    const double x = (t - center) / half_width;
    if (std::abs(x) >= 1.0) return 0.0;
    return depth * 0.5 * (1.0 + std::cos(std::numbers::pi * x));
  }
};

struct CarAProfile {
  double v0 = 0.0;      // speed at t = 0 while approaching the yield line
  double decel = 1.0;   // braking to a stop exactly at the yield line
  double t_dep = 0.0;   // departure time
  double cruise = 6.0;  // target speed after departure
  double accel = 2.0;   // peak acceleration of the departure ramp

  double approach_speed(double t) const { return std::max(0.0, v0 - decel * t); }

  double operator()(double t) const {
    if (t < t_dep) return approach_speed(t);
    const double vs = approach_speed(t_dep);
    if (cruise <= vs) return vs;
    const double tau = std::numbers::pi * (cruise - vs) / (2.0 * accel);
    const double x = t - t_dep;
    if (x >= tau) return cruise;
    return vs + (cruise - vs) * 0.5 * (1.0 - std::cos(std::numbers::pi * x / tau));
  }
};

std::vector<TrajectorySample> sample_motion(const Motion& m, const ReferencePath& path, double t_end, Rng& noise,
                                            double sigma) {
  std::vector<TrajectorySample> out;
  const auto n = static_cast<std::size_t>(std::llround(t_end / kSimDt));
  const auto stride = static_cast<std::size_t>(std::llround(kSimDt / kFineDt));
  for (std::size_t i = 0; i <= n; ++i) {
    const std::size_t k = std::min(i * stride, m.t.size() - 1);
    Point2 p = path.point_at(m.s[k]);
    if (sigma > 0.0) p = p + Point2{noise.normal(0.0, sigma), noise.normal(0.0, sigma)};
    out.push_back({static_cast<double>(i) * kSimDt, p, m.v[k]});
  }
  return out;
}

Trajectory finish(std::string id, std::vector<TrajectorySample> raw, int smooth_window) {
  Trajectory tr(std::move(id), std::move(raw));
  int w = smooth_window;
  while (w > 1 && static_cast<std::size_t>(w) > tr.size()) w -= 2;
  if (w > 1) tr = smooth(tr, w);
  return downsample(tr, static_cast<int>(std::llround(kEpisodeDt / kSimDt)));
}

const PathLayout& layout_for(const std::vector<PathLayout>& layouts, int entry, int exit) {
  for (const auto& l : layouts)
    if (l.path.entry_branch() == entry && l.path.exit_branch() == exit) return l;
  throw InvalidArgument("no reference path from branch " + std::to_string(entry) + " to " + std::to_string(exit));
}

std::vector<int> exits_from(const RoundaboutSpec& spec, int entry) {
  std::vector<int> out;
  for (const auto& [e, x] : spec.routes)
    if (e == entry) out.push_back(x);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Geometry

RoundaboutSpec RoundaboutSpec::default_spec() {
  RoundaboutSpec s;
  for (int k = 0; k < 8; ++k) s.branch_angles.push_back(k * std::numbers::pi / 4.0);
  for (int k = 0; k < 8; ++k) {
    s.routes.emplace_back(k, (k + 2) % 8);
    s.routes.emplace_back(k, (k + 4) % 8);
  }
  for (int k : {1, 4, 6}) s.routes.emplace_back(k, (k + 6) % 8);
  return s;
}

void RoundaboutSpec::validate() const {
  if (branch_count != 8) throw InvalidArgument("roundabout must have 8 branches");
  if (branch_angles.size() != 8) throw InvalidArgument("roundabout needs 8 branch angles");
  for (std::size_t i = 0; i < branch_angles.size(); ++i) {
    if (branch_angles[i] < 0.0 || branch_angles[i] >= kTwoPi) throw InvalidArgument("branch angle outside [0, 2pi)");
    if (i > 0 && !(branch_angles[i] > branch_angles[i - 1]))
      throw InvalidArgument("branch angles must be strictly increasing");
  }
  if (!(ring_radius > 0.0) || !(junction_gap > 0.0) || !(approach_length > 0.0) || !(vertex_spacing > 0.0))
    throw InvalidArgument("roundabout dimensions must be positive");
  if (!(entry_offset > 0.0) || !(exit_offset > 0.0)) throw InvalidArgument("entry/exit offsets must be positive");
}

std::string path_id(int entry, int exit) { return "e" + std::to_string(entry) + "x" + std::to_string(exit); }

PathLayout build_path_layout(const RoundaboutSpec& spec, int entry, int exit) {
  spec.validate();
  if (entry < 0 || entry >= 8 || exit < 0 || exit >= 8) throw InvalidArgument("branch index out of range");
  if (entry == exit) throw InvalidArgument("U-turn routes (entry == exit) are not supported");

  const double R = spec.ring_radius;
  const Point2 c = spec.center;
  const double th_in = spec.branch_angles[static_cast<std::size_t>(entry)];
  const double th_out = spec.branch_angles[static_cast<std::size_t>(exit)];
  const double merge = th_in + spec.entry_offset / R;
  const double diverge = th_out - spec.exit_offset / R;
  double sweep = wrap_angle(diverge - merge);
  if (sweep <= 0.0) sweep += kTwoPi;

  const double fine = 0.05;
  const Point2 lane_in_far = c + (R + spec.junction_gap + spec.approach_length) * unit(th_in) +
                             spec.lane_offset * ccw_tangent(th_in);
  const Point2 lane_in_near = c + (R + spec.junction_gap) * unit(th_in) + spec.lane_offset * ccw_tangent(th_in);
  const Point2 ring_in = c + R * unit(merge);
  const Point2 ring_out = c + R * unit(diverge);
  const Point2 lane_out_near = c + (R + spec.junction_gap) * unit(th_out) - spec.lane_offset * ccw_tangent(th_out);
  const Point2 lane_out_far = c + (R + spec.junction_gap + spec.approach_length) * unit(th_out) -
                              spec.lane_offset * ccw_tangent(th_out);

  std::vector<Point2> dense;
  append_dense(dense, line_piece(lane_in_far, lane_in_near, fine));
  append_dense(dense, hermite_piece(lane_in_near, -1.0 * unit(th_in), ring_in, ccw_tangent(merge), fine));
  append_dense(dense, ring_piece(c, R, merge, sweep, fine));
  append_dense(dense, hermite_piece(ring_out, ccw_tangent(diverge), lane_out_near, unit(th_out), fine));
  append_dense(dense, line_piece(lane_out_near, lane_out_far, fine));

  double total = 0.0;
  for (std::size_t i = 1; i < dense.size(); ++i) total += distance(dense[i - 1], dense[i]);
  const auto count = static_cast<std::size_t>(std::ceil(total / spec.vertex_spacing)) + 1;
  PathLayout layout{ReferencePath(path_id(entry, exit), entry, exit, resample_polyline(dense, count))};
  // Landmarks by projection, restricted to the expected order along the path.
  layout.s_yield = layout.path.project(lane_in_near).s;
  layout.s_merge = layout.path.project(ring_in).s;
  layout.s_diverge = layout.path.project(ring_out).s;
  layout.s_exit_lane = layout.path.project(lane_out_near).s;
  return layout;
}

std::vector<PathLayout> build_path_layouts(const RoundaboutSpec& spec) {
  std::vector<PathLayout> out;
  out.reserve(spec.routes.size());
  for (const auto& [e, x] : spec.routes) out.push_back(build_path_layout(spec, e, x));
  return out;
}

std::vector<ReferencePath> build_reference_paths(const RoundaboutSpec& spec) {
  std::vector<ReferencePath> out;
  for (auto& l : build_path_layouts(spec)) out.push_back(std::move(l.path));
  return out;
}

const char* to_string(Negotiation n) { return n == Negotiation::pass ? "pass" : "yield"; }

Negotiation negotiation_from_string(const std::string& s) {
  if (s == "pass") return Negotiation::pass;
  if (s == "yield") return Negotiation::yield;
  throw InvalidArgument("unknown negotiation label '" + s + "'");
}

void ScenarioParams::validate() const {
  if (!(speed_min > 0.0) || !(speed_max >= speed_min)) throw InvalidArgument("speed range must be positive and ordered");
  if (noise_sigma < 0.0) throw InvalidArgument("noise sigma must be >= 0");
  if (pass_prob < 0.0 || pass_prob > 1.0 || exit_before_prob < 0.0 || exit_before_prob > 1.0)
    throw InvalidArgument("probabilities must lie in [0, 1]");
  if (a_branches.empty()) throw InvalidArgument("a_branches must not be empty");
  if (!(duration_min > 0.0) || duration_max < duration_min) throw InvalidArgument("invalid duration range");
  if (!(headway_min > 0.0) || headway_max < headway_min) throw InvalidArgument("invalid headway range");
  if (smooth_window < 1 || smooth_window % 2 == 0) throw InvalidArgument("smooth_window must be odd and >= 1");
}

// ---------------------------------------------------------------------------
// Episodes

Episode generate_episode(const RoundaboutSpec& spec, const ScenarioParams& params, std::uint64_t seed,
                         std::string case_id) {
  spec.validate();
  params.validate();
  const auto layouts = build_path_layouts(spec);
  const Rng root(seed);
  Rng rng_route = root.substream("route");
  Rng rng_label = root.substream("label");
  Rng rng_b = root.substream("car_b");
  Rng rng_a = root.substream("car_a");
  Rng rng_front = root.substream("front");
  Rng rng_noise = root.substream("noise");
  Rng rng_time = root.substream("duration");

  // Route choice.
  const int a_entry = params.force_a_branch.value_or(
      params.a_branches[rng_route.uniform_index(params.a_branches.size())]);
  const int b_entry = wrap_branch(a_entry - 2, spec.branch_count);
  const auto a_exits = exits_from(spec, a_entry);
  const auto b_exits = exits_from(spec, b_entry);
  if (a_exits.empty() || b_exits.empty()) throw InvalidArgument("route table lacks routes for the scenario branches");
  if (std::find(b_exits.begin(), b_exits.end(), a_entry) == b_exits.end())
    throw InvalidArgument("route table has no path exiting at A's branch for B");
  std::vector<int> b_continue;
  for (int x : b_exits)
    if (x != a_entry) b_continue.push_back(x);
  if (b_continue.empty()) throw InvalidArgument("route table has no path for B past A's branch");
  const bool draw_exit_before = rng_route.bernoulli(params.exit_before_prob);
  const int drawn_continue = b_continue[rng_route.uniform_index(b_continue.size())];
  const int b_exit = params.force_b_exit.value_or(draw_exit_before ? a_entry : drawn_continue);
  const int a_exit = a_exits[rng_route.uniform_index(a_exits.size())];
  const Negotiation label =
      params.force_label.value_or(rng_label.bernoulli(params.pass_prob) ? Negotiation::pass : Negotiation::yield);

  const PathLayout& la = layout_for(layouts, a_entry, a_exit);
  const PathLayout& lb = layout_for(layouts, b_entry, b_exit);
  const PathLayout& lb_exit_here = layout_for(layouts, b_entry, a_entry);
  const bool interacting = paths_cross(la.path, lb.path);

  // Ring point where B would leave at A's branch, and A's merge point, both
  // as arc lengths along B's own path.
  const double sb_decision = lb.path.project(lb_exit_here.path.point_at(lb_exit_here.s_diverge)).s;
  const double sb_conflict = interacting ? lb.path.project(la.path.point_at(la.s_merge)).s : kNaN;

  for (int attempt = 0; attempt < 200; ++attempt) {
    // Car B: cruise speed and start such that the exit decision comes 3-5 s in.
    const double vb = rng_b.uniform(params.speed_min, params.speed_max);
    const double t_decision = rng_b.uniform(3.0, 5.0);
    const double sb0 = std::clamp(sb_decision - vb * t_decision, 0.0, std::max(0.0, lb.s_merge - 2.0));
    std::vector<Dip> b_dips;
    const bool exit_slowdown = rng_b.bernoulli(0.5);
    const double exit_dip_depth = rng_b.uniform(0.2, 0.5) * vb;
    const double exit_dip_width = rng_b.uniform(1.0, 2.0);

    // Car A: rolls up to the yield line and stops there unless it departs first.
    CarAProfile pa;
    const double d0 = rng_a.uniform(0.0, 4.0);
    pa.decel = rng_a.uniform(1.0, 2.0);
    pa.v0 = std::sqrt(2.0 * pa.decel * d0);
    pa.cruise = rng_a.uniform(params.speed_min, params.speed_max);
    pa.accel = rng_a.uniform(1.5, 2.5);
    const double sa0 = la.s_yield - d0;
    const double t_stop = pa.v0 / pa.decel;
    const bool a_goes_early = rng_a.bernoulli(0.5);
    const double early_dep = rng_a.uniform(0.4, 2.0);
    const double react_delay = rng_a.uniform(0.3, 1.2);
    const double pass_margin = rng_a.uniform(0.8, 2.0);
    const double yield_margin = rng_b.uniform(1.0, 2.0);
    const double dip_frac = rng_b.uniform(0.5, 0.85);
    const double dip_shift = rng_b.uniform(0.0, 0.3);

    const double horizon = 60.0;
    auto b_speed = [&](double t) {
      double v = vb;
      for (const auto& d : b_dips) v -= d(t);
      return v;
    };
    auto simulate_b = [&] { return integrate(b_speed, sb0, horizon, lb.path.length()); };

    bool ok = true;
    if (!interacting) {
      if (exit_slowdown) {
        const double t_dec = (sb_decision - sb0) / vb;
        b_dips.push_back({t_dec, exit_dip_width, exit_dip_depth});
      }
      const Motion mb = simulate_b();
      pa.t_dep = a_goes_early ? early_dep : mb.time_at(sb_decision) + react_delay;
    } else if (label == Negotiation::pass) {
      const Motion mb = simulate_b();
      const double tb_conf = mb.time_at(sb_conflict);
      // Time for A to reach its merge point from a standstill at the yield line.
      CarAProfile from_rest = pa;
      from_rest.v0 = 0.0;
      from_rest.t_dep = 0.0;
      const Motion probe = integrate(from_rest, la.s_yield, horizon, la.path.length());
      const double reach = probe.time_at(la.s_merge);
      pa.t_dep = tb_conf + pass_margin - reach;
      ok = std::isfinite(pa.t_dep) && pa.t_dep >= t_stop;
    } else {
      pa.t_dep = early_dep;
      const Motion ma = integrate(pa, sa0, horizon, la.path.length());
      const double ta_conf = ma.time_at(la.s_merge);
      const double target = ta_conf + yield_margin;
      const double dist = sb_conflict - sb0;
      const double deficit = vb * target - dist;
      if (deficit > 0.0) {
        double depth = dip_frac * vb;
        double w = deficit / depth;
        if (2.0 * w > target) {
          depth = 0.9 * vb;
          w = deficit / depth;
        }
        if (2.0 * w > target) {
          ok = false;
        } else {
          b_dips.push_back({target - w - dip_shift * (target - 2.0 * w), w, depth});
        }
      }
    }
    if (!ok) continue;

    const Motion mb = simulate_b();
    const Motion ma = integrate(pa, sa0, horizon, la.path.length());
    const double t_b_decision = mb.time_at(sb_decision);
    const double t_b_pre_exit = mb.time_at(lb.s_exit_lane);
    const double t_b_conflict = interacting ? mb.time_at(sb_conflict) : kNaN;
    const double t_a_conflict = ma.time_at(la.s_merge);
    if (!std::isfinite(t_b_decision) || !std::isfinite(t_b_pre_exit) || !std::isfinite(t_a_conflict)) continue;
    if (interacting) {
      if (!std::isfinite(t_b_conflict)) continue;
      if (label == Negotiation::pass && !(t_b_conflict < t_a_conflict)) continue;
      if (label == Negotiation::yield && !(t_b_conflict > t_a_conflict)) continue;
    }

    double required = std::max(t_b_pre_exit + 0.4, t_b_decision + 1.4);
    if (interacting) required = std::max(required, std::max(t_b_conflict, t_a_conflict) + 1.0);
    double t_end = std::max(rng_time.uniform(params.duration_min, params.duration_max), required);
    const double tb_end = mb.time_at(lb.path.length() - 1.0);
    const double ta_end = ma.time_at(la.path.length() - 1.0);
    if (std::isfinite(tb_end)) t_end = std::min(t_end, tb_end);
    if (std::isfinite(ta_end)) t_end = std::min(t_end, ta_end);
    if (t_end < required) continue;
    t_end = std::floor(t_end / kEpisodeDt + 1e-9) * kEpisodeDt;

    Episode ep;
    ep.case_id = std::move(case_id);
    ep.seed = seed;
    ep.a_entry = a_entry;
    ep.a_exit = a_exit;
    ep.b_entry = b_entry;
    ep.b_exit = b_exit;
    ep.label = label;
    ep.interacting = interacting;
    ep.t_b_diverge = t_b_decision;
    ep.t_b_pre_exit = t_b_pre_exit;
    ep.t_b_conflict = t_b_conflict;
    ep.t_a_conflict = t_a_conflict;
    ep.car_a = finish("A", sample_motion(ma, la.path, t_end, rng_noise, params.noise_sigma), params.smooth_window);
    ep.car_b = finish("B", sample_motion(mb, lb.path, t_end, rng_noise, params.noise_sigma), params.smooth_window);

    // Front vehicles on their own routes from the same entries; they leave
    // the record once they reach the end of their path.
    auto make_front = [&](const std::string& id, int entry, double s_subject, double v_subject) -> std::optional<Trajectory> {
      const auto exits = exits_from(spec, entry);
      const PathLayout& lf = layout_for(layouts, entry, exits[rng_front.uniform_index(exits.size())]);
      const double vf = rng_front.uniform(params.speed_min, params.speed_max);
      const double headway = rng_front.uniform(params.headway_min, params.headway_max);
      const double sf0 = s_subject + std::max(v_subject, vf) * headway;
      if (sf0 >= lf.path.length() - 1.0) return std::nullopt;
      const double t_gone = std::min(t_end, (lf.path.length() - 1.0 - sf0) / vf);
      const double t_last = std::floor(t_gone / kSimDt + 1e-9) * kSimDt;
      const Motion mf = integrate([vf](double) { return vf; }, sf0, t_last, lf.path.length());
      return finish(id, sample_motion(mf, lf.path, t_last, rng_noise, params.noise_sigma), params.smooth_window);
    };
    ep.front_a = make_front("FA", a_entry, sa0, pa.v0);
    ep.front_b = make_front("FB", b_entry, sb0, vb);
    return ep;
  }
  throw InvalidArgument("could not generate a feasible episode for seed " + std::to_string(seed) +
                        " (check speed range and scenario parameters)");
}

// ---------------------------------------------------------------------------
// Datasets

Dataset generate_dataset(const RoundaboutSpec& spec, const ScenarioParams& params, std::size_t n_cases,
                         double split_ratio, std::uint64_t seed) {
  if (n_cases < kMinCases)
    throw InvalidArgument("dataset needs at least " + std::to_string(kMinCases) + " cases, got " +
                          std::to_string(n_cases));
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw InvalidArgument("split ratio must lie in (0, 1)");
  Dataset ds;
  ds.spec = spec;
  ds.params = params;
  ds.seed = seed;
  ds.split_ratio = split_ratio;
  const Rng root(seed);
  for (std::size_t i = 0; i < n_cases; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "case%05zu", i);
    ds.episodes.push_back(generate_episode(spec, params, root.substream("episode").substream(i).seed(), id));
  }
  std::vector<std::size_t> order(n_cases);
  for (std::size_t i = 0; i < n_cases; ++i) order[i] = i;
  Rng shuffle = root.substream("split");
  for (std::size_t i = n_cases; i-- > 1;) std::swap(order[i], order[shuffle.uniform_index(i + 1)]);
  const auto n_train = static_cast<std::size_t>(std::llround(split_ratio * static_cast<double>(n_cases)));
  ds.train_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  ds.test_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(ds.train_ids.begin(), ds.train_ids.end());
  std::sort(ds.test_ids.begin(), ds.test_ids.end());
  return ds;
}

std::vector<WindowExample> extract_windows(const Episode& ep, const Normalizer& norm, std::size_t t1, std::size_t t2) {
  std::vector<WindowExample> out;
  const std::size_t n = std::min(ep.car_a.size(), ep.car_b.size());
  if (n < t1 + t2) {
    spdlog::warn("episode {} has {} samples, fewer than T1 + T2 = {}; skipped", ep.case_id, n, t1 + t2);
    return out;
  }
  const IntentionOneHot intention(ep.b_exit);
  for (std::size_t end = t1 - 1; end + t2 < n; ++end) {
    WindowExample w;
    w.fv = make_features(ep.car_a, ep.car_b, ep.front_a, ep.front_b, end, t1, intention, norm);
    w.future = make_future(ep.car_a, ep.car_b, end, t2, norm);
    w.case_id = ep.case_id;
    w.t = ep.car_b[end].t;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<WindowExample> extract_windows(const Dataset& ds, const std::vector<std::size_t>& ids, std::size_t t1,
                                           std::size_t t2) {
  std::vector<WindowExample> out;
  const Normalizer norm = ds.spec.normalizer();
  for (std::size_t id : ids) {
    auto w = extract_windows(ds.episodes.at(id), norm, t1, t2);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

std::optional<std::size_t> bimodal_window_end(const Episode& ep, const RoundaboutSpec& spec, std::size_t t1,
                                              std::size_t t2, double min_separation) {
  const PathLayout exit_here = build_path_layout(spec, ep.b_entry, ep.a_entry);
  std::optional<PathLayout> stay;
  for (const auto& [e, x] : spec.routes)
    if (e == ep.b_entry && x != ep.a_entry) {
      stay = build_path_layout(spec, e, x);
      break;
    }
  if (!stay) return std::nullopt;

  const auto& b = ep.car_b;
  std::optional<std::size_t> end;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i].t > ep.t_b_diverge + 1e-9) break;
    end = i;
  }
  if (!end || *end + 1 < t1 || *end + t2 >= b.size()) return std::nullopt;

  // Distance travelled by B over the horizon, laid along both continuations.
  const PathLayout own = build_path_layout(spec, ep.b_entry, ep.b_exit);
  const double travelled = own.path.project(b[*end + t2].pos).s - own.path.project(b[*end].pos).s;
  const double s_now = exit_here.path.project(b[*end].pos).s;
  const double s_stay_now = stay->path.project(b[*end].pos).s;
  const Point2 p_exit = exit_here.path.point_at(s_now + std::max(0.0, travelled));
  const Point2 p_stay = stay->path.point_at(s_stay_now + std::max(0.0, travelled));
  if (distance(p_exit, p_stay) < min_separation) return std::nullopt;
  return end;
}

}  // namespace ipred
