#pragma once

#include <cstdint>
#include <utility>

#include "memspm/dataset.hpp"

namespace memspm {

// Planted benchmark: every class is a union of well-separated sub-clusters,
// the target domain is the source geometry plus one shared translation, and
// target-private classes get fresh sub-cluster means with no source
// counterpart.
struct SyntheticSpec {
  std::size_t n_common = 6;
  std::size_t n_src_private = 2;
  std::size_t n_tgt_private = 3;
  std::size_t subclusters_per_class = 3;
  std::size_t dim = 16;
  std::size_t samples_per_subcluster = 50;
  double shift_scale = 1.0;
  double noise_sigma = 0.15;
  double separation = 4.0;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t total_classes() const { return n_common + n_src_private + n_tgt_private; }
};

struct SyntheticStats {
  double min_source_mean_dist = 0.0;
  double min_target_mean_dist = 0.0;
  bool has_substructure = false;  // subclusters_per_class > 1
};

// Deterministic given the seed. Sub-cluster means lie on the sphere of radius
// `separation`, greedily repelled within each class; samples add isotropic
// noise_sigma noise. Target labels stay public as ground truth; hide them
// before training.
std::pair<EmbeddingDataset, EmbeddingDataset> generate_synthetic(const SyntheticSpec& spec,
                                                                 SyntheticStats* stats = nullptr);

}  // namespace memspm
