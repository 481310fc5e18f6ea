#include "ipred/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ipred::dc {

double evaluate_loss(ParamStore& params, const LossBuilder& build) {
  Graph g;
  Var root = build(g, params);
  return g.value(root)(0, 0);
}

GradCheckReport check_gradients(ParamStore& params, const LossBuilder& build, GradCheckOptions options) {
  params.zero_grad();
  {
    Graph g;
    Var root = build(g, params);
    g.backward(root);
  }

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = params[pi];
    const std::size_t n = p.value.size();
    const std::size_t stride =
        options.max_checks_per_param == 0 || n <= options.max_checks_per_param ? 1 : n / options.max_checks_per_param;
    for (std::size_t k = 0; k < n; k += stride) {
      const double orig = p.value[k];
      p.value[k] = orig + options.step;
      const double plus = evaluate_loss(params, build);
      p.value[k] = orig - options.step;
      const double minus = evaluate_loss(params, build);
      p.value[k] = orig;

      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = p.grad[k];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), options.denominator_floor});
      const double rel = std::abs(numeric - analytic) / denom;
      ++report.checked;
      if (rel > report.max_rel_error || report.worst_param.empty()) {
        report.max_rel_error = std::max(rel, report.max_rel_error);
        report.worst_param = p.name;
        report.worst_index = k;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace ipred::dc
