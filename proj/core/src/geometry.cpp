#include "ipred/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "ipred/error.hpp"

namespace ipred {

Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
Point2 operator*(double k, Point2 p) { return {k * p.x, k * p.y}; }
double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
double norm(Point2 p) { return std::hypot(p.x, p.y); }
double distance(Point2 a, Point2 b) { return norm(a - b); }

namespace {

bool finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

bool segments_intersect(Point2 p0, Point2 p1, Point2 q0, Point2 q1) {
  const Point2 r = p1 - p0;
  const Point2 s = q1 - q0;
  const double denom = cross(r, s);
  if (denom == 0.0) return false;  // parallel: endpoint distances cover it
  const double t = cross(q0 - p0, s) / denom;
  const double u = cross(q0 - p0, r) / denom;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Trajectory

Trajectory::Trajectory(std::string agent_id, std::vector<TrajectorySample> samples)
    : agent_id_(std::move(agent_id)), samples_(std::move(samples)) {
  if (samples_.empty()) throw InvalidArgument("trajectory '" + agent_id_ + "' has no samples");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.t) || !finite(s.pos) || !std::isfinite(s.v))
      throw InvalidArgument("trajectory '" + agent_id_ + "' has a non-finite sample");
    if (s.v < 0.0) throw InvalidArgument("trajectory '" + agent_id_ + "' has negative speed");
    if (i > 0 && !(s.t > samples_[i - 1].t))
      throw InvalidArgument("trajectory '" + agent_id_ + "' timestamps are not strictly increasing");
  }
}

std::vector<Point2> Trajectory::positions() const {
  std::vector<Point2> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.pos);
  return out;
}

Trajectory Trajectory::slice_time(double t0, double t1) const {
  std::vector<TrajectorySample> out;
  for (const auto& s : samples_)
    if (s.t >= t0 - 1e-9 && s.t <= t1 + 1e-9) out.push_back(s);
  if (out.empty()) throw InvalidArgument("time window holds no sample of '" + agent_id_ + "'");
  return Trajectory(agent_id_, std::move(out));
}

std::size_t Trajectory::index_at(double t) const {
  auto it = std::lower_bound(samples_.begin(), samples_.end(), t - 1e-6,
                             [](const TrajectorySample& s, double v) { return s.t < v; });
  if (it != samples_.end() && std::abs(it->t - t) <= 1e-6)
    return static_cast<std::size_t>(it - samples_.begin());
  return npos;
}

// ---------------------------------------------------------------------------
// ReferencePath

ReferencePath::ReferencePath(std::string id, int entry_branch, int exit_branch,
                             std::vector<Point2> polyline)
    : id_(std::move(id)),
      entry_branch_(entry_branch),
      exit_branch_(exit_branch),
      polyline_(std::move(polyline)) {
  if (polyline_.size() < 2) throw InvalidArgument("reference path '" + id_ + "' needs >= 2 vertices");
  if (entry_branch_ < 0 || entry_branch_ > 7 || exit_branch_ < 0 || exit_branch_ > 7)
    throw InvalidArgument("reference path '" + id_ + "' branch out of range 0..7");
  cum_arclength_.reserve(polyline_.size());
  cum_arclength_.push_back(0.0);
  for (std::size_t i = 0; i < polyline_.size(); ++i) {
    if (!finite(polyline_[i])) throw InvalidArgument("reference path '" + id_ + "' has a non-finite vertex");
    if (i == 0) continue;
    if (polyline_[i] == polyline_[i - 1])
      throw InvalidArgument("reference path '" + id_ + "' repeats a consecutive vertex");
    cum_arclength_.push_back(cum_arclength_.back() + distance(polyline_[i - 1], polyline_[i]));
  }
}

Point2 ReferencePath::point_at(double s) const {
  s = std::clamp(s, 0.0, length());
  auto it = std::upper_bound(cum_arclength_.begin(), cum_arclength_.end(), s);
  std::size_t i = it == cum_arclength_.end() ? polyline_.size() - 1
                                              : static_cast<std::size_t>(it - cum_arclength_.begin());
  if (i == 0) return polyline_.front();
  const double seg = cum_arclength_[i] - cum_arclength_[i - 1];
  const double f = seg > 0.0 ? (s - cum_arclength_[i - 1]) / seg : 0.0;
  return polyline_[i - 1] + f * (polyline_[i] - polyline_[i - 1]);
}

Point2 ReferencePath::tangent_at(double s) const {
  s = std::clamp(s, 0.0, length());
  auto it = std::upper_bound(cum_arclength_.begin(), cum_arclength_.end(), s);
  std::size_t i = it == cum_arclength_.end() ? polyline_.size() - 1
                                              : static_cast<std::size_t>(it - cum_arclength_.begin());
  i = std::clamp<std::size_t>(i, 1, polyline_.size() - 1);
  const Point2 d = polyline_[i] - polyline_[i - 1];
  return (1.0 / norm(d)) * d;
}

ReferencePath::Projection ReferencePath::project(Point2 p) const {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < polyline_.size(); ++i) {
    const Point2 a = polyline_[i - 1];
    const Point2 d = polyline_[i] - a;
    const double len2 = dot(d, d);
    const double f = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
    const Point2 foot = a + f * d;
    const double dist = distance(p, foot);
    // Strict comparison keeps the earliest (smallest s) on ties.
    if (dist < best.distance) {
      best.distance = dist;
      best.foot = foot;
      best.s = cum_arclength_[i - 1] + f * (cum_arclength_[i] - cum_arclength_[i - 1]);
    }
  }
  return best;
}

std::vector<Point2> ReferencePath::extract(double start_s, double end_s) const {
  std::vector<Point2> out;
  out.push_back(point_at(start_s));
  for (std::size_t i = 0; i < polyline_.size(); ++i)
    if (cum_arclength_[i] > start_s && cum_arclength_[i] < end_s && !(polyline_[i] == out.back()))
      out.push_back(polyline_[i]);
  const Point2 last = point_at(end_s);
  if (!(last == out.back())) out.push_back(last);
  return out;
}

// ---------------------------------------------------------------------------
// Operations

Trajectory downsample(const Trajectory& traj, int factor) {
  if (factor < 1) throw InvalidArgument("downsample factor must be >= 1");
  std::vector<TrajectorySample> out;
  out.reserve(traj.size() / static_cast<std::size_t>(factor) + 1);
  for (std::size_t i = 0; i < traj.size(); i += static_cast<std::size_t>(factor)) out.push_back(traj[i]);
  return Trajectory(traj.agent_id(), std::move(out));
}

PathSegment nearest_segment(const ReferencePath& path, const Trajectory& traj, double margin) {
  const double total = path.length();
  const double s_first = path.project(traj.front().pos).s;
  const double s_last = path.project(traj.back().pos).s;
  double start = std::clamp(std::min(s_first, s_last) - margin, 0.0, total);
  double end = std::clamp(std::max(s_first, s_last) + margin, 0.0, total);
  if (end - start < kMinSegmentLength) {
    end = std::min(total, start + kMinSegmentLength);
    start = std::max(0.0, end - kMinSegmentLength);
  }
  return PathSegment{path.id(), start, end, path.extract(start, end)};
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return distance(p, a);
  const double f = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
  return distance(p, a + f * d);
}

double segment_distance(Point2 p0, Point2 p1, Point2 q0, Point2 q1) {
  if (segments_intersect(p0, p1, q0, q1)) return 0.0;
  return std::min({point_segment_distance(p0, q0, q1), point_segment_distance(p1, q0, q1),
                   point_segment_distance(q0, p0, p1), point_segment_distance(q1, p0, p1)});
}

double point_polyline_distance(Point2 p, std::span<const Point2> polyline) {
  if (polyline.empty()) throw InvalidArgument("empty polyline");
  if (polyline.size() == 1) return distance(p, polyline[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < polyline.size(); ++i)
    best = std::min(best, point_segment_distance(p, polyline[i - 1], polyline[i]));
  return best;
}

std::vector<Point2> resample_polyline(std::span<const Point2> polyline, std::size_t count) {
  if (polyline.empty()) throw InvalidArgument("resample_polyline: empty polyline");
  if (count < 2) throw InvalidArgument("resample_polyline: count must be >= 2");
  std::vector<double> cum(polyline.size(), 0.0);
  for (std::size_t i = 1; i < polyline.size(); ++i) cum[i] = cum[i - 1] + distance(polyline[i - 1], polyline[i]);
  const double total = cum.back();
  std::vector<Point2> out;
  out.reserve(count);
  std::size_t k = 1;
  for (std::size_t n = 0; n < count; ++n) {
    const double s = total * static_cast<double>(n) / static_cast<double>(count - 1);
    while (k + 1 < polyline.size() && cum[k] < s) ++k;
    if (polyline.size() == 1 || total == 0.0) {
      out.push_back(polyline.front());
      continue;
    }
    const double seg = cum[k] - cum[k - 1];
    const double f = seg > 0.0 ? std::clamp((s - cum[k - 1]) / seg, 0.0, 1.0) : 0.0;
    out.push_back(polyline[k - 1] + f * (polyline[k] - polyline[k - 1]));
  }
  out.back() = polyline.back();
  return out;
}

bool paths_cross(const ReferencePath& a, const ReferencePath& b, double tol) {
  const auto& pa = a.polyline();
  const auto& pb = b.polyline();
  for (std::size_t i = 1; i < pa.size(); ++i) {
    const double ax0 = std::min(pa[i - 1].x, pa[i].x) - tol, ax1 = std::max(pa[i - 1].x, pa[i].x) + tol;
    const double ay0 = std::min(pa[i - 1].y, pa[i].y) - tol, ay1 = std::max(pa[i - 1].y, pa[i].y) + tol;
    for (std::size_t j = 1; j < pb.size(); ++j) {
      if (std::max(pb[j - 1].x, pb[j].x) < ax0 || std::min(pb[j - 1].x, pb[j].x) > ax1) continue;
      if (std::max(pb[j - 1].y, pb[j].y) < ay0 || std::min(pb[j - 1].y, pb[j].y) > ay1) continue;
      if (segment_distance(pa[i - 1], pa[i], pb[j - 1], pb[j]) <= tol) return true;
    }
  }
  return false;
}

Trajectory smooth(const Trajectory& traj, int window) {
  if (window < 1 || window % 2 == 0) throw InvalidArgument("smoothing window must be a positive odd integer");
  const auto n = static_cast<std::ptrdiff_t>(traj.size());
  if (window > n) throw InvalidArgument("smoothing window exceeds trajectory length");
  const std::ptrdiff_t half = window / 2;
  std::vector<TrajectorySample> out(traj.samples());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t h = std::min({half, i, n - 1 - i});
    double sx = 0.0, sy = 0.0, sv = 0.0;
    for (std::ptrdiff_t k = i - h; k <= i + h; ++k) {
      const auto& s = traj[static_cast<std::size_t>(k)];
      sx += s.pos.x;
      sy += s.pos.y;
      sv += s.v;
    }
    const double cnt = static_cast<double>(2 * h + 1);
    auto& o = out[static_cast<std::size_t>(i)];
    o.pos = {sx / cnt, sy / cnt};
    o.v = std::max(0.0, sv / cnt);
  }
  return Trajectory(traj.agent_id(), std::move(out));
}

}  // namespace ipred
