#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "memspm/losses.hpp"
#include "memspm/matrix.hpp"

namespace memspm {

struct PseudoLabeling {
  std::vector<std::size_t> cluster_of;                           // target index -> cluster
  std::vector<std::pair<std::int32_t, std::size_t>> consensus;   // (class, cluster)
  std::vector<std::int32_t> pseudo_label;                        // class id or kUnknownLabel
  std::vector<bool> unknown_mask;

  std::vector<std::int32_t> consensus_classes() const;
  std::size_t unknown_count() const;
};

// Mutual nearest neighbors under cosine similarity between source class
// centers and target cluster centers. Each class and each cluster appears in
// at most one pair; an empty result is valid (everything unknown this round).
// Zero-norm centers never match.
std::vector<std::pair<std::int32_t, std::size_t>> cycle_consistent_match(
    const RealMatrix& src_centers, const std::vector<std::int32_t>& src_classes,
    const RealMatrix& tgt_centers);

// samples in matched clusters take the matched class; the rest are unknown
PseudoLabeling assign_pseudo_labels(
    const std::vector<std::size_t>& assignment,
    const std::vector<std::pair<std::int32_t, std::size_t>>& consensus, std::size_t n_clusters);

}  // namespace memspm
