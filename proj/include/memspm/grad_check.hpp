#pragma once

#include <functional>
#include <map>
#include <string>

#include "memspm/param_store.hpp"

namespace memspm {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::map<std::string, double> per_param_max;
  double tol = 0.0;
  bool passed = true;
};

// Central finite differences against the analytic gradients already stored in
// `store`. `f` must be a deterministic pure loss evaluation over the store's
// parameters (it must not touch the gradient maps). Relative error per entry:
// |a - n| / max(|a|, |n|, 1e-8). A failing check is a report, not an error.
GradCheckReport finite_diff_check(const std::function<double(ParamStore&)>& f, ParamStore& store,
                                  double step, double tol);

}  // namespace memspm
