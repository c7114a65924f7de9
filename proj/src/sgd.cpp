#include "memspm/sgd.hpp"

#include <cmath>

#include "memspm/errors.hpp"

namespace memspm {

double lr_at(const SgdConfig& cfg, std::size_t i) {
  if (cfg.total_iters < 1) throw ContractViolation("lr_at: total_iters must be >= 1");
  double progress = static_cast<double>(i) / static_cast<double>(cfg.total_iters);
  return cfg.lr0 * std::pow(1.0 + cfg.alpha * progress, -cfg.beta);
}

void sgd_step(ParamStore& store, const SgdConfig& cfg, std::size_t iteration) {
  const double lr = lr_at(cfg, iteration);
  for (const std::string& name : store.names()) {
    RealMatrix& p = store.param(name);
    RealMatrix& g = store.grad(name);
    RealMatrix& v = store.velocity(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      double gp = g.data()[i] + cfg.weight_decay * p.data()[i];
      double vn = cfg.momentum * v.data()[i] - lr * gp;
      v.data()[i] = vn;
      p.data()[i] += cfg.momentum * vn - lr * gp;
    }
    g.fill(0.0);
  }
}

}  // namespace memspm
