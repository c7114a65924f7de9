#include "memspm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace memspm {

bool RealMatrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void RealMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double l2_norm(VecView a) { return std::sqrt(l2_norm_sq(a)); }

double cosine_similarity(VecView a, VecView b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  double na = l2_norm(a);
  double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw std::domain_error("cosine_similarity: zero-norm vector");
  return dot(a, b) / (na * nb);
}

void softmax_inplace(std::span<double> v) {
  if (v.empty()) throw std::invalid_argument("softmax: empty input");
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

std::vector<double> softmax(VecView v) {
  std::vector<double> out(v.begin(), v.end());
  softmax_inplace(out);
  return out;
}

}  // namespace memspm
