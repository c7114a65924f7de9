#include "memspm/synthetic.hpp"

#include <cmath>
#include <limits>

#include "memspm/errors.hpp"
#include "memspm/rng.hpp"

namespace memspm {

void SyntheticSpec::validate() const {
  if (n_common == 0) throw ContractViolation("SyntheticSpec: n_common must be >= 1");
  if (subclusters_per_class == 0 || dim == 0 || samples_per_subcluster == 0)
    throw ContractViolation("SyntheticSpec: counts must be >= 1");
  if (noise_sigma <= 0.0 || separation <= 0.0)
    throw ContractViolation("SyntheticSpec: noise_sigma and separation must be positive");
  if (shift_scale < 0.0) throw ContractViolation("SyntheticSpec: shift_scale must be >= 0");
}

namespace {

std::vector<double> random_direction(Rng& rng, std::size_t dim, double radius) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    for (double& x : v) x = rng.normal();
    norm = l2_norm(v);
  } while (norm == 0.0);
  for (double& x : v) x *= radius / norm;
  return v;
}

// greedy farthest-point pick of `count` means from 10*count sphere candidates
std::vector<std::vector<double>> pick_means(Rng& rng, std::size_t count, std::size_t dim,
                                            double radius) {
  std::vector<std::vector<double>> candidates;
  for (std::size_t i = 0; i < 10 * count; ++i)
    candidates.push_back(random_direction(rng, dim, radius));

  std::vector<std::vector<double>> chosen;
  std::vector<bool> used(candidates.size(), false);
  chosen.push_back(candidates[0]);
  used[0] = true;
  while (chosen.size() < count) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (used[i]) continue;
      double d = std::numeric_limits<double>::infinity();
      for (const auto& c : chosen) d = std::min(d, squared_distance(candidates[i], c));
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    chosen.push_back(candidates[best]);
    used[best] = true;
  }
  return chosen;
}

double min_pairwise_distance(const std::vector<std::vector<double>>& means) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < means.size(); ++i)
    for (std::size_t j = i + 1; j < means.size(); ++j)
      best = std::min(best, std::sqrt(squared_distance(means[i], means[j])));
  return best;
}

}  // namespace

std::pair<EmbeddingDataset, EmbeddingDataset> generate_synthetic(const SyntheticSpec& spec,
                                                                 SyntheticStats* stats) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t g = spec.subclusters_per_class;
  const std::size_t total = spec.total_classes();

  // per-class sub-cluster means, classes in ascending id order
  std::vector<std::vector<std::vector<double>>> means(total);
  for (std::size_t c = 0; c < total; ++c)
    means[c] = pick_means(rng, g, spec.dim, spec.separation);

  // one domain shift shared by every target class
  std::vector<double> shift(spec.dim, 0.0);
  if (spec.shift_scale > 0.0) shift = random_direction(rng, spec.dim, spec.shift_scale);

  const std::size_t n_source_classes = spec.n_common + spec.n_src_private;
  auto emit = [&](EmbeddingDataset& ds, std::size_t class_id, std::size_t sub,
                  const std::vector<double>& mean, std::size_t row) {
    auto out = ds.vectors.row(row);
    for (std::size_t k = 0; k < spec.dim; ++k)
      out[k] = mean[k] + rng.normal(0.0, spec.noise_sigma);
    ds.labels[row] = static_cast<std::int32_t>(class_id);
    ds.subcluster_ids[row] = static_cast<std::int32_t>(class_id * g + sub);
  };

  EmbeddingDataset source;
  source.domain = Domain::source;
  source.vectors = RealMatrix(n_source_classes * g * spec.samples_per_subcluster, spec.dim);
  source.labels.resize(source.vectors.rows());
  source.subcluster_ids.resize(source.vectors.rows());
  std::size_t row = 0;
  std::vector<std::vector<double>> source_means;
  for (std::size_t c = 0; c < n_source_classes; ++c) {
    for (std::size_t s = 0; s < g; ++s) {
      source_means.push_back(means[c][s]);
      for (std::size_t i = 0; i < spec.samples_per_subcluster; ++i)
        emit(source, c, s, means[c][s], row++);
    }
  }

  // target classes: the shared block plus the target-private tail
  std::vector<std::size_t> target_classes;
  for (std::size_t c = 0; c < spec.n_common; ++c) target_classes.push_back(c);
  for (std::size_t c = n_source_classes; c < total; ++c) target_classes.push_back(c);

  EmbeddingDataset target;
  target.domain = Domain::target;
  target.vectors = RealMatrix(target_classes.size() * g * spec.samples_per_subcluster, spec.dim);
  target.labels.resize(target.vectors.rows());
  target.subcluster_ids.resize(target.vectors.rows());
  row = 0;
  std::vector<std::vector<double>> target_means;
  for (std::size_t c : target_classes) {
    for (std::size_t s = 0; s < g; ++s) {
      std::vector<double> mean = means[c][s];
      for (std::size_t k = 0; k < spec.dim; ++k) mean[k] += shift[k];
      target_means.push_back(mean);
      for (std::size_t i = 0; i < spec.samples_per_subcluster; ++i)
        emit(target, c, s, mean, row++);
    }
  }

  if (stats) {
    stats->min_source_mean_dist = min_pairwise_distance(source_means);
    stats->min_target_mean_dist = min_pairwise_distance(target_means);
    stats->has_substructure = g > 1;
  }
  return {std::move(source), std::move(target)};
}

}  // namespace memspm
