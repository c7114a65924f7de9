#include "memspm/param_store.hpp"

#include "memspm/errors.hpp"

namespace memspm {

RealMatrix& ParamStore::create(const std::string& name, std::size_t rows, std::size_t cols) {
  if (params_.count(name)) throw ContractViolation("ParamStore: duplicate parameter " + name);
  params_[name] = RealMatrix(rows, cols);
  grads_[name] = RealMatrix(rows, cols);
  velocities_[name] = RealMatrix(rows, cols);
  return params_[name];
}

static RealMatrix& lookup(std::map<std::string, RealMatrix>& m, const std::string& name,
                          const char* what) {
  auto it = m.find(name);
  if (it == m.end()) throw ContractViolation(std::string(what) + ": unknown parameter " + name);
  return it->second;
}

RealMatrix& ParamStore::param(const std::string& name) { return lookup(params_, name, "param"); }

const RealMatrix& ParamStore::param(const std::string& name) const {
  return lookup(const_cast<std::map<std::string, RealMatrix>&>(params_), name, "param");
}

RealMatrix& ParamStore::grad(const std::string& name) { return lookup(grads_, name, "grad"); }

const RealMatrix& ParamStore::grad(const std::string& name) const {
  return lookup(const_cast<std::map<std::string, RealMatrix>&>(grads_), name, "grad");
}

RealMatrix& ParamStore::velocity(const std::string& name) {
  return lookup(velocities_, name, "velocity");
}

void ParamStore::zero_grads() {
  for (auto& [name, g] : grads_) g.fill(0.0);
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

}  // namespace memspm
