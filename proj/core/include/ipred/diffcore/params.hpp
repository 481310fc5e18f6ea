#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ipred/diffcore/tensor.hpp"
#include "ipred/rng.hpp"

namespace ipred::dc {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Ordered collection of named parameters. Insertion order is the
// serialisation and optimisation order. Element addresses are stable
// (parameters are never removed).
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Parameter& add(const std::string& name, Tensor value);
  // Uniform in [-sqrt(1/fan_in), +sqrt(1/fan_in)].
  Parameter& add_uniform(const std::string& name, std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  std::size_t scalar_count() const;
  void zero_grad();
  void fill(double value);

  bool same_layout(const ParamStore& other) const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace ipred::dc
