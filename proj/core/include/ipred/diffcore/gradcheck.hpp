#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "ipred/diffcore/graph.hpp"
#include "ipred/diffcore/params.hpp"

namespace ipred::dc {

struct GradCheckOptions {
  double step = 1e-5;
  // Denominator floor of the relative error, so entries whose true gradient
  // is ~0 are judged on absolute error instead.
  double denominator_floor = 1e-6;
  // 0 checks every scalar.
  std::size_t max_checks_per_param = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Builds the scalar loss with `build`, compares the tape gradients against
// central finite differences for every parameter in `params`. Parameter
// values are restored on return.
using LossBuilder = std::function<Var(Graph&, ParamStore&)>;
GradCheckReport check_gradients(ParamStore& params, const LossBuilder& build, GradCheckOptions options = {});

// Evaluates the loss without recording gradients.
double evaluate_loss(ParamStore& params, const LossBuilder& build);

}  // namespace ipred::dc
