#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ipred/cvae.hpp"
#include "ipred/diffcore/tensor.hpp"
#include "ipred/pipeline.hpp"

namespace ipred {

inline constexpr double kVarianceFloor = 1e-12;

// (1/N) sum_s mean_d (y_d - s_d)^2
double mse(const dc::Tensor& y, std::span<const dc::Tensor> samples);

// Diagonal Gaussian fit (population variance, floored) per dimension:
// 0.5 log var + (y - mean)^2 / (2 var), averaged over dimensions.
double nll(const dc::Tensor& y, std::span<const dc::Tensor> samples);

struct MethodScore {
  std::string method;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  double nll_mean = 0.0;
  double nll_std = 0.0;
  std::vector<double> case_mse;
  std::vector<double> case_nll;
};

struct EvalReport {
  std::vector<MethodScore> methods;
  std::size_t case_count = 0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::string config_digest;

  const MethodScore& at(const std::string& method) const;
  std::string to_json() const;
  // Aligned text table: one row per method, "mean ± std" cells.
  std::string to_table() const;
};

// Produces world-unit samples for one case.
using Predictor = std::function<PredictionResult(const EvalCase&, std::size_t n_samples, std::uint64_t seed)>;

struct NamedPredictor {
  std::string method;
  Predictor predict;
};

// Seed handed to every method for a given case.
std::uint64_t case_seed(std::uint64_t seed, const std::string& case_id);

// Scores every method on the same cases with the same sample count and the
// same per-case seed. Methods keep their input order in the report.
EvalReport evaluate(std::span<const NamedPredictor> methods, std::span<const EvalCase> cases, std::size_t n_samples,
                    std::uint64_t seed);

}  // namespace ipred
