#include "ipred/features.hpp"

#include <cmath>

#include "ipred/error.hpp"

namespace ipred {

void FeatureVector::validate(std::size_t t1) const {
  if (past_joint.shape() != std::vector<std::size_t>{t1, kJointFeatures})
    throw ShapeError("feature past_joint must be [" + std::to_string(t1) + "x4], got " + past_joint.shape_string());
  if (environment.shape() != std::vector<std::size_t>{kEnvFeatures})
    throw ShapeError("feature environment must be [6], got " + environment.shape_string());
  if (!past_joint.all_finite() || !environment.all_finite()) throw NumericError("feature vector has non-finite entries");
}

namespace {

// Heading from the most recent displacement that exceeds 0.1 m, falling back
// to the direction towards the site center.
Point2 heading(const Trajectory& subject, std::size_t idx, const Normalizer& norm) {
  const Point2 here = subject[idx].pos;
  for (std::size_t k = idx; k-- > 0;) {
    const Point2 d = here - subject[k].pos;
    if (dot(d, d) > 0.01) return (1.0 / ipred::norm(d)) * d;
  }
  const Point2 in = norm.center - here;
  const double n = ipred::norm(in);
  return n > 0.0 ? (1.0 / n) * in : Point2{1.0, 0.0};
}

}  // namespace

std::array<double, 3> front_state(const std::optional<Trajectory>& front, const Trajectory& subject,
                                  std::size_t subject_index, const Normalizer& norm) {
  const double t = subject[subject_index].t;
  if (front) {
    const std::size_t k = front->index_at(t);
    if (k != Trajectory::npos) {
      const auto& s = (*front)[k];
      const Point2 p = norm.to_model(s.pos);
      return {p.x, p.y, norm.speed_to_model(s.v)};
    }
  }
  const auto& s = subject[subject_index];
  const Point2 p = norm.to_model(s.pos + kSentinelDistance * heading(subject, subject_index, norm));
  return {p.x, p.y, norm.speed_to_model(s.v)};
}

FeatureVector make_features(const Trajectory& a, const Trajectory& b, const std::optional<Trajectory>& front_a,
                            const std::optional<Trajectory>& front_b, std::size_t end_index, std::size_t t1,
                            IntentionOneHot intention, const Normalizer& norm) {
  if (t1 == 0 || end_index + 1 < t1) throw InvalidArgument("make_features: window starts before the first sample");
  if (end_index >= a.size() || end_index >= b.size()) throw InvalidArgument("make_features: window past the end");
  FeatureVector fv;
  fv.past_joint = dc::Tensor({t1, kJointFeatures});
  for (std::size_t k = 0; k < t1; ++k) {
    const std::size_t i = end_index + 1 - t1 + k;
    if (std::abs(a[i].t - b[i].t) > 1e-6) throw InvalidArgument("make_features: trajectories are not time-aligned");
    const Point2 pa = norm.to_model(a[i].pos);
    const Point2 pb = norm.to_model(b[i].pos);
    fv.past_joint.at(k, 0) = pa.x;
    fv.past_joint.at(k, 1) = pa.y;
    fv.past_joint.at(k, 2) = pb.x;
    fv.past_joint.at(k, 3) = pb.y;
  }
  const auto fa = front_state(front_a, a, end_index, norm);
  const auto fb = front_state(front_b, b, end_index, norm);
  fv.environment = dc::Tensor::vector({fa[0], fa[1], fa[2], fb[0], fb[1], fb[2]});
  fv.intention = intention;
  return fv;
}

dc::Tensor make_future(const Trajectory& a, const Trajectory& b, std::size_t end_index, std::size_t t2,
                       const Normalizer& norm) {
  if (end_index + t2 >= a.size() || end_index + t2 >= b.size())
    throw InvalidArgument("make_future: horizon runs past the end of the trajectory");
  dc::Tensor y({t2 * kJointFeatures});
  for (std::size_t k = 0; k < t2; ++k) {
    const std::size_t i = end_index + 1 + k;
    const Point2 pa = norm.to_model(a[i].pos);
    const Point2 pb = norm.to_model(b[i].pos);
    y[4 * k + 0] = pa.x;
    y[4 * k + 1] = pa.y;
    y[4 * k + 2] = pb.x;
    y[4 * k + 3] = pb.y;
  }
  return y;
}

}  // namespace ipred
