#pragma once

#include <map>
#include <string>
#include <vector>

#include "memspm/matrix.hpp"

namespace memspm {

// Named parameters with parallel gradient and momentum-velocity maps.
// The three maps always hold the same keys with matching shapes.
class ParamStore {
 public:
  RealMatrix& create(const std::string& name, std::size_t rows, std::size_t cols);

  bool has(const std::string& name) const { return params_.count(name) != 0; }

  RealMatrix& param(const std::string& name);
  const RealMatrix& param(const std::string& name) const;
  RealMatrix& grad(const std::string& name);
  const RealMatrix& grad(const std::string& name) const;
  RealMatrix& velocity(const std::string& name);

  void zero_grads();

  // ascending name order; iteration order is the update order
  std::vector<std::string> names() const;
  std::size_t count() const { return params_.size(); }

  const std::map<std::string, RealMatrix>& all() const { return params_; }

 private:
  std::map<std::string, RealMatrix> params_;
  std::map<std::string, RealMatrix> grads_;
  std::map<std::string, RealMatrix> velocities_;
};

}  // namespace memspm
