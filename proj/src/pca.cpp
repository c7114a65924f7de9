#include "memspm/pca.hpp"

#include <algorithm>
#include <cmath>

#include "memspm/errors.hpp"

namespace memspm {

namespace {

// cyclic Jacobi eigen decomposition of a symmetric matrix; rows of `vectors`
// end up as eigenvectors matching `values`
void jacobi_eigen(RealMatrix a, std::vector<double>& values, RealMatrix& vectors) {
  const std::size_t n = a.rows();
  vectors = RealMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) vectors(i, i) = 1.0;

  for (std::size_t sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors(p, k), vkq = vectors(q, k);
          vectors(p, k) = c * vkp - s * vkq;
          vectors(q, k) = s * vkp + c * vkq;
        }
      }
    }
  }
  values.resize(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
}

}  // namespace

Pca2 pca2_fit(const RealMatrix& points) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (n < 2 || d < 2) throw ContractViolation("pca2_fit: need at least 2 points in 2+ dims");

  Pca2 pca;
  pca.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = points.row(i);
    for (std::size_t k = 0; k < d; ++k) pca.mean[k] += r[k];
  }
  for (double& m : pca.mean) m /= static_cast<double>(n);

  RealMatrix cov(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = points.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = r[a] - pca.mean[a];
      for (std::size_t b = a; b < d; ++b) cov(a, b) += xa * (r[b] - pca.mean[b]);
    }
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= static_cast<double>(n - 1);
      cov(b, a) = cov(a, b);
    }

  std::vector<double> values;
  RealMatrix vectors;
  jacobi_eigen(cov, values, vectors);

  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  pca.components = RealMatrix(2, d);
  for (std::size_t c = 0; c < 2; ++c) {
    auto src = vectors.row(order[c]);
    auto dst = pca.components.row(c);
    std::copy(src.begin(), src.end(), dst.begin());
    pca.explained[c] = values[order[c]];
    std::size_t big = 0;
    for (std::size_t k = 1; k < d; ++k) {
      if (std::abs(dst[k]) > std::abs(dst[big])) big = k;
    }
    if (dst[big] < 0.0) {
      for (std::size_t k = 0; k < d; ++k) dst[k] = -dst[k];
    }
  }
  return pca;
}

RealMatrix pca2_project(const Pca2& pca, const RealMatrix& points) {
  if (points.cols() != pca.mean.size()) throw ContractViolation("pca2_project: width mismatch");
  RealMatrix out(points.rows(), 2);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto r = points.row(i);
    for (std::size_t c = 0; c < 2; ++c) {
      double acc = 0.0;
      auto axis = pca.components.row(c);
      for (std::size_t k = 0; k < r.size(); ++k) acc += (r[k] - pca.mean[k]) * axis[k];
      out(i, c) = acc;
    }
  }
  return out;
}

}  // namespace memspm
