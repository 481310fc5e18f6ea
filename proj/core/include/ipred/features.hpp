#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>

#include "ipred/diffcore/tensor.hpp"
#include "ipred/geometry.hpp"
#include "ipred/intention.hpp"

namespace ipred {

inline constexpr std::size_t kJointFeatures = 4;  // xA, yA, xB, yB
inline constexpr std::size_t kEnvFeatures = 6;    // (x, y, v) of A's and B's front vehicle
// Distance ahead of the subject, along its current heading, at which a
// missing front vehicle is placed.
inline constexpr double kSentinelDistance = 30.0;

// Per-site coordinate normalisation: translate by the roundabout center,
// divide by the ring radius. Speeds are divided by the same scale.
struct Normalizer {
  Point2 center;
  double scale = 1.0;

  Point2 to_model(Point2 p) const { return {(p.x - center.x) / scale, (p.y - center.y) / scale}; }
  Point2 to_world(Point2 p) const { return {p.x * scale + center.x, p.y * scale + center.y}; }
  double speed_to_model(double v) const { return v / scale; }
};

struct FeatureVector {
  dc::Tensor past_joint;   // [T1 x 4], normalised
  dc::Tensor environment;  // [6], normalised
  IntentionOneHot intention{0};

  // Throws on wrong shapes or non-finite entries.
  void validate(std::size_t t1) const;
};

// One sliding window: features at time t plus the flattened normalised
// ground-truth future [T2 * 4].
struct WindowExample {
  FeatureVector fv;
  dc::Tensor future;
  std::string case_id;
  double t = 0.0;
};

// (x, y, v) of `front` at time t in model units, or the sentinel when the
// front vehicle is absent at t.
std::array<double, 3> front_state(const std::optional<Trajectory>& front, const Trajectory& subject,
                                  std::size_t subject_index, const Normalizer& norm);

// Features for the window ending at sample `end_index` (inclusive) of the
// time-aligned trajectories a and b.
FeatureVector make_features(const Trajectory& a, const Trajectory& b, const std::optional<Trajectory>& front_a,
                            const std::optional<Trajectory>& front_b, std::size_t end_index, std::size_t t1,
                            IntentionOneHot intention, const Normalizer& norm);

// Flattened future [t2 * 4] for samples end_index+1 .. end_index+t2.
dc::Tensor make_future(const Trajectory& a, const Trajectory& b, std::size_t end_index, std::size_t t2,
                       const Normalizer& norm);

}  // namespace ipred
