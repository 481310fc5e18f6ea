#pragma once

#include <cstdint>
#include <vector>

#include "ipred/diffcore/params.hpp"

namespace ipred::dc {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam moments for one ParamStore layout.
class OptimizerState {
 public:
  OptimizerState() = default;
  OptimizerState(const ParamStore& params, AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_; }

  // One Adam step using each parameter's grad. Throws NumericError naming
  // the first parameter with a non-finite gradient; params are untouched
  // in that case.
  void step(ParamStore& params);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(ParamStore& params, double max_norm);

}  // namespace ipred::dc
