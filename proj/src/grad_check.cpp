#include "memspm/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace memspm {

GradCheckReport finite_diff_check(const std::function<double(ParamStore&)>& f, ParamStore& store,
                                  double step, double tol) {
  // snapshot analytic gradients before perturbing anything
  std::map<std::string, RealMatrix> analytic;
  for (const std::string& name : store.names()) analytic[name] = store.grad(name);

  GradCheckReport report;
  report.tol = tol;
  for (const std::string& name : store.names()) {
    RealMatrix& p = store.param(name);
    const RealMatrix& a = analytic[name];
    report.per_param_max[name] = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + step;
      const double f_plus = f(store);
      p.data()[i] = saved - step;
      const double f_minus = f(store);
      p.data()[i] = saved;

      const double numeric = (f_plus - f_minus) / (2.0 * step);
      const double ai = a.data()[i];
      const double rel = std::abs(ai - numeric) / std::max({std::abs(ai), std::abs(numeric), 1e-8});
      report.per_param_max[name] = std::max(report.per_param_max[name], rel);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_index = i;
        report.worst_analytic = ai;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_err <= tol;
  return report;
}

}  // namespace memspm
