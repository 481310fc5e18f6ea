#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ipred {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

Point2 operator+(Point2 a, Point2 b);
Point2 operator-(Point2 a, Point2 b);
Point2 operator*(double k, Point2 p);
double dot(Point2 a, Point2 b);
double norm(Point2 p);
double distance(Point2 a, Point2 b);

struct TrajectorySample {
  double t = 0.0;  // seconds
  Point2 pos;      // meters
  double v = 0.0;  // m/s

  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

// Timestamped track of one agent. Construction validates: at least one
// sample, strictly increasing time, finite coordinates and v >= 0.
class Trajectory {
 public:
  Trajectory(std::string agent_id, std::vector<TrajectorySample> samples);

  const std::string& agent_id() const { return agent_id_; }
  const std::vector<TrajectorySample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  const TrajectorySample& operator[](std::size_t i) const { return samples_[i]; }
  const TrajectorySample& front() const { return samples_.front(); }
  const TrajectorySample& back() const { return samples_.back(); }

  std::vector<Point2> positions() const;

  // Samples with t in [t0, t1] (inclusive, 1e-9 slack). Throws when the
  // window holds no sample.
  Trajectory slice_time(double t0, double t1) const;

  // Index of the sample whose timestamp equals t (within 1e-6), or npos.
  std::size_t index_at(double t) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::string agent_id_;
  std::vector<TrajectorySample> samples_;
};

// Polyline from an entry lane to an exit lane with cumulative arc length.
class ReferencePath {
 public:
  ReferencePath(std::string id, int entry_branch, int exit_branch, std::vector<Point2> polyline);

  const std::string& id() const { return id_; }
  int entry_branch() const { return entry_branch_; }
  int exit_branch() const { return exit_branch_; }
  const std::vector<Point2>& polyline() const { return polyline_; }
  const std::vector<double>& cum_arclength() const { return cum_arclength_; }
  double length() const { return cum_arclength_.back(); }

  // Point at arc length s (clamped to [0, length]).
  Point2 point_at(double s) const;
  // Unit tangent at arc length s.
  Point2 tangent_at(double s) const;

  struct Projection {
    double s = 0.0;         // arc length of the foot point
    double distance = 0.0;  // Euclidean distance to the foot point
    Point2 foot;
  };
  // Closest point on the polyline. Ties resolve to the smallest arc length.
  Projection project(Point2 p) const;

  // Vertices strictly inside (start_s, end_s) plus the two interpolated
  // endpoints.
  std::vector<Point2> extract(double start_s, double end_s) const;

 private:
  std::string id_;
  int entry_branch_;
  int exit_branch_;
  std::vector<Point2> polyline_;
  std::vector<double> cum_arclength_;
};

struct PathSegment {
  std::string path_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<Point2> polyline;
};

// Keeps every factor-th sample starting from the first.
Trajectory downsample(const Trajectory& traj, int factor);

// Segment of `path` spanning the projections of the trajectory's first and
// last positions, widened by `margin` and clamped to [0, L]. Segments
// shorter than kMinSegmentLength are grown (forward first) so that
// start_s < end_s always holds.
inline constexpr double kMinSegmentLength = 0.5;
PathSegment nearest_segment(const ReferencePath& path, const Trajectory& traj, double margin);

// Default crossing tolerance: half a 3.6 m lane.
inline constexpr double kDefaultCrossTolerance = 1.8;

// True iff some segment of a comes within tol of some segment of b.
bool paths_cross(const ReferencePath& a, const ReferencePath& b, double tol = kDefaultCrossTolerance);

// Centered moving average over x, y and v; endpoints use shrunken
// (still centered) windows. `window` must be odd and <= size().
Trajectory smooth(const Trajectory& traj, int window);

// Minimum distance between the closed segments [p0,p1] and [q0,q1].
double segment_distance(Point2 p0, Point2 p1, Point2 q0, Point2 q1);

// Distance from p to the closed segment [a,b].
double point_segment_distance(Point2 p, Point2 a, Point2 b);

// `count` points equally spaced in arc length along the polyline, first and
// last vertex included. count >= 2.
std::vector<Point2> resample_polyline(std::span<const Point2> polyline, std::size_t count);

// Distance from p to a polyline (minimum over its segments, or to the
// single vertex).
double point_polyline_distance(Point2 p, std::span<const Point2> polyline);

}  // namespace ipred
