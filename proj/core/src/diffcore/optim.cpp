#include "ipred/diffcore/optim.hpp"

#include <cmath>

#include "ipred/error.hpp"

namespace ipred::dc {

OptimizerState::OptimizerState(const ParamStore& params, AdamConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params[i].value.size(), 0.0);
    v_.emplace_back(params[i].value.size(), 0.0);
  }
}

void OptimizerState::step(ParamStore& params) {
  if (params.size() != m_.size()) throw ShapeError("optimizer state does not match parameter layout");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].grad.size() != m_[i].size())
      throw ShapeError("optimizer buffer for '" + params[i].name + "' does not match its shape");
    if (!params[i].grad.all_finite()) throw NumericError("non-finite gradient for parameter '" + params[i].name + "'");
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i].value.data();
    const auto& grad = params[i].grad.data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g;
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      value[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

double clip_grad_norm(ParamStore& params, double max_norm) {
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (double g : params[i].grad.data()) sq += g * g;
  const double total = std::sqrt(sq);
  if (max_norm > 0.0 && total > max_norm) {
    const double k = max_norm / total;
    for (std::size_t i = 0; i < params.size(); ++i)
      for (double& g : params[i].grad.data()) g *= k;
  }
  return total;
}

}  // namespace ipred::dc
