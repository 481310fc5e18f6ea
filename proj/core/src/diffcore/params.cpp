#include "ipred/diffcore/params.hpp"

#include <cmath>
#include <memory>

#include "ipred/error.hpp"

namespace ipred::dc {

ParamStore::ParamStore(const ParamStore& other) : index_(other.index_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    ParamStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParamStore::add(const std::string& name, Tensor value) {
  if (contains(name)) throw InvalidArgument("duplicate parameter '" + name + "'");
  Tensor grad(value.shape(), 0.0);
  index_.emplace(name, params_.size());
  params_.push_back(std::make_unique<Parameter>(Parameter{name, std::move(value), std::move(grad)}));
  return *params_.back();
}

Parameter& ParamStore::add_uniform(const std::string& name, std::vector<std::size_t> shape, std::size_t fan_in,
                                   Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return add(name, std::move(t));
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
  return *params_[it->second];
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) std::fill(p->grad.data().begin(), p->grad.data().end(), 0.0);
}

void ParamStore::fill(double value) {
  for (auto& p : params_) std::fill(p->value.data().begin(), p->value.data().end(), value);
}

bool ParamStore::same_layout(const ParamStore& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i)
    if ((*this)[i].name != other[i].name || (*this)[i].value.shape() != other[i].value.shape()) return false;
  return true;
}

}  // namespace ipred::dc
