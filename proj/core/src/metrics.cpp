#include "ipred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ipred/error.hpp"
#include "ipred/rng.hpp"

namespace ipred {

namespace {

void check_samples(const dc::Tensor& y, std::span<const dc::Tensor> samples, std::size_t min_count, const char* what) {
  if (samples.size() < min_count)
    throw InvalidArgument(std::string(what) + " needs at least " + std::to_string(min_count) + " samples, got " +
                          std::to_string(samples.size()));
  if (y.size() == 0) throw InvalidArgument(std::string(what) + ": empty target");
  for (const auto& s : samples)
    if (s.size() != y.size())
      throw ShapeError(std::string(what) + ": sample has " + std::to_string(s.size()) + " entries, target has " +
                       std::to_string(y.size()));
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  return {m, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace

double mse(const dc::Tensor& y, std::span<const dc::Tensor> samples) {
  check_samples(y, samples, 1, "mse");
  double total = 0.0;
  for (const auto& s : samples) {
    double acc = 0.0;
    for (std::size_t d = 0; d < y.size(); ++d) acc += (y[d] - s[d]) * (y[d] - s[d]);
    total += acc / static_cast<double>(y.size());
  }
  return total / static_cast<double>(samples.size());
}

double nll(const dc::Tensor& y, std::span<const dc::Tensor> samples) {
  check_samples(y, samples, 2, "nll");
  const double n = static_cast<double>(samples.size());
  double total = 0.0;
  for (std::size_t d = 0; d < y.size(); ++d) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s[d];
    mean /= n;
    double var = 0.0;
    for (const auto& s : samples) var += (s[d] - mean) * (s[d] - mean);
    var = std::max(var / n, kVarianceFloor);
    total += 0.5 * std::log(var) + (y[d] - mean) * (y[d] - mean) / (2.0 * var);
  }
  return total / static_cast<double>(y.size());
}

const MethodScore& EvalReport::at(const std::string& method) const {
  for (const auto& m : methods)
    if (m.method == method) return m;
  throw InvalidArgument("no method '" + method + "' in report");
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["case_count"] = case_count;
  j["n_samples"] = n_samples;
  j["seed"] = seed;
  j["config_digest"] = config_digest;
  auto& arr = j["methods"] = nlohmann::ordered_json::array();
  for (const auto& m : methods) {
    arr.push_back({{"method", m.method},
                   {"mse_mean", m.mse_mean},
                   {"mse_std", m.mse_std},
                   {"nll_mean", m.nll_mean},
                   {"nll_std", m.nll_std}});
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  auto cell = [](double m, double s) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << m << " ± " << s;
    return os.str();
  };
  std::size_t name_w = std::string("Method").size();
  for (const auto& m : methods) name_w = std::max(name_w, m.method.size());
  std::vector<std::pair<std::string, std::string>> cells;
  std::size_t mse_w = 3, nll_w = 3;
  for (const auto& m : methods) {
    cells.emplace_back(cell(m.mse_mean, m.mse_std), cell(m.nll_mean, m.nll_std));
    // "±" is two bytes but one column wide
    mse_w = std::max(mse_w, cells.back().first.size() - 1);
    nll_w = std::max(nll_w, cells.back().second.size() - 1);
  }
  auto pad = [](const std::string& s, std::size_t w, std::size_t extra = 0) {
    return s + std::string(w + extra > s.size() ? w + extra - s.size() : 0, ' ');
  };
  std::ostringstream os;
  os << pad("Method", name_w) << "  " << pad("MSE", mse_w) << "  " << "NLL" << "\n";
  os << std::string(name_w + mse_w + nll_w + 4, '-') << "\n";
  for (std::size_t i = 0; i < methods.size(); ++i)
    os << pad(methods[i].method, name_w) << "  " << pad(cells[i].first, mse_w, 1) << "  " << cells[i].second << "\n";
  os << "cases: " << case_count << ", samples per case: " << n_samples << "\n";
  return os.str();
}

std::uint64_t case_seed(std::uint64_t seed, const std::string& case_id) {
  return mix_seed(seed, hash_name(case_id));
}

EvalReport evaluate(std::span<const NamedPredictor> methods, std::span<const EvalCase> cases, std::size_t n_samples,
                    std::uint64_t seed) {
  if (cases.empty()) throw InvalidArgument("evaluate: empty test set");
  if (methods.empty()) throw InvalidArgument("evaluate: no methods");
  EvalReport report;
  report.case_count = cases.size();
  report.n_samples = n_samples;
  report.seed = seed;
  for (const auto& method : methods) {
    MethodScore score;
    score.method = method.method;
    for (const auto& c : cases) {
      const PredictionResult r = method.predict(c, n_samples, case_seed(seed, c.case_id));
      if (r.samples.size() != n_samples)
        throw InvalidArgument("method " + method.method + " returned " + std::to_string(r.samples.size()) +
                              " samples, expected " + std::to_string(n_samples));
      std::vector<dc::Tensor> flat;
      flat.reserve(r.samples.size());
      for (const auto& s : r.samples) flat.push_back(dc::Tensor::vector(s.data()));
      score.case_mse.push_back(mse(c.truth, flat));
      score.case_nll.push_back(nll(c.truth, flat));
    }
    std::tie(score.mse_mean, score.mse_std) = mean_std(score.case_mse);
    std::tie(score.nll_mean, score.nll_std) = mean_std(score.case_nll);
    report.methods.push_back(std::move(score));
  }
  return report;
}

}  // namespace ipred
