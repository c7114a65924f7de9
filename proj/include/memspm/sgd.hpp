#pragma once

#include <cstddef>
#include <cstdint>

#include "memspm/param_store.hpp"

namespace memspm {

struct SgdConfig {
  double lr0 = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double alpha = 10.0;   // schedule strength
  double beta = 0.75;    // schedule exponent
  std::size_t total_iters = 1;
};

// lr0 * (1 + alpha * i / total_iters)^(-beta), nonincreasing in i
double lr_at(const SgdConfig& cfg, std::size_t i);

// Nesterov momentum step over every parameter, ascending name order:
//   g' = g + weight_decay * p
//   v  = momentum * v - lr * g'
//   p += momentum * v - lr * g'
// Gradients are zeroed afterward.
void sgd_step(ParamStore& store, const SgdConfig& cfg, std::size_t iteration);

}  // namespace memspm
