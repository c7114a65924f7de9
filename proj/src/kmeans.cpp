#include "memspm/kmeans.hpp"

#include <limits>
#include <map>

#include "memspm/errors.hpp"
#include "memspm/rng.hpp"

namespace memspm {

namespace {

std::size_t nearest_center(const RealMatrix& centers, VecView p, double* dist_out) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = squared_distance(centers.row(c), p);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

}  // namespace

KmeansResult kmeans(const RealMatrix& points, std::size_t k, std::uint64_t seed) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (k == 0) throw ContractViolation("kmeans: k must be >= 1");
  if (n < k) throw ContractViolation("kmeans: fewer points than clusters");

  Rng rng(seed);
  KmeansResult res;
  res.centers = RealMatrix(k, d);

  // k-means++ seeding
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  {
    const std::size_t first = rng.below(n);
    auto c0 = res.centers.row(0);
    auto p0 = points.row(first);
    std::copy(p0.begin(), p0.end(), c0.begin());
    for (std::size_t i = 0; i < n; ++i) min_d[i] = squared_distance(points.row(i), p0);
    for (std::size_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (double v : min_d) total += v;
      std::size_t pick = 0;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += min_d[i];
          if (acc >= target) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.below(n);  // all points coincide with chosen centers
      }
      auto cr = res.centers.row(c);
      auto pr = points.row(pick);
      std::copy(pr.begin(), pr.end(), cr.begin());
      for (std::size_t i = 0; i < n; ++i)
        min_d[i] = std::min(min_d[i], squared_distance(points.row(i), pr));
    }
  }

  res.assignment.assign(n, 0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t iter = 0; iter < 100; ++iter) {
    res.iterations = iter + 1;
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = nearest_center(res.centers, points.row(i), nullptr);
      if (a != res.assignment[i]) {
        res.assignment[i] = a;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    res.centers.fill(0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = res.centers.row(res.assignment[i]);
      auto p = points.row(i);
      for (std::size_t j = 0; j < d; ++j) c[j] += p[j];
      counts[res.assignment[i]] += 1;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto cr = res.centers.row(c);
      for (std::size_t j = 0; j < d; ++j) cr[j] /= static_cast<double>(counts[c]);
    }
    // re-seed empties from the point farthest from its own center
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dist = squared_distance(points.row(i), res.centers.row(res.assignment[i]));
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      auto cr = res.centers.row(c);
      auto pr = points.row(far);
      std::copy(pr.begin(), pr.end(), cr.begin());
      counts[c] = 1;
    }
  }

  res.distortion = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dist = 0.0;
    res.assignment[i] = nearest_center(res.centers, points.row(i), &dist);
    res.distortion += dist;
  }
  return res;
}

RealMatrix class_centers(const RealMatrix& zhat, const std::vector<std::int32_t>& labels,
                         std::vector<std::int32_t>& classes_out) {
  if (zhat.rows() != labels.size()) throw ContractViolation("class_centers: size mismatch");
  std::map<std::int32_t, std::pair<std::vector<double>, std::size_t>> acc;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0) continue;
    auto& [sum, count] = acc[labels[r]];
    if (sum.empty()) sum.assign(zhat.cols(), 0.0);
    auto row = zhat.row(r);
    for (std::size_t k = 0; k < zhat.cols(); ++k) sum[k] += row[k];
    count += 1;
  }
  classes_out.clear();
  RealMatrix centers(acc.size(), zhat.cols());
  std::size_t r = 0;
  for (auto& [c, entry] : acc) {
    classes_out.push_back(c);
    for (std::size_t k = 0; k < zhat.cols(); ++k)
      centers(r, k) = entry.first[k] / static_cast<double>(entry.second);
    ++r;
  }
  return centers;
}

}  // namespace memspm
