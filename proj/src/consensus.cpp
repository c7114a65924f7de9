#include "memspm/consensus.hpp"

#include <algorithm>

#include "memspm/errors.hpp"

namespace memspm {

std::vector<std::int32_t> PseudoLabeling::consensus_classes() const {
  std::vector<std::int32_t> out;
  out.reserve(consensus.size());
  for (const auto& [c, t] : consensus) out.push_back(c);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t PseudoLabeling::unknown_count() const {
  std::size_t n = 0;
  for (bool u : unknown_mask) n += u ? 1 : 0;
  return n;
}

namespace {

// cosine with zero-norm guard: a zero center is similar to nothing
double center_similarity(VecView a, VecView b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return -2.0;
  return dot(a, b) / (na * nb);
}

// index of the most similar row (lowest index on ties); n rows >= 1
std::size_t best_row(const RealMatrix& rows, VecView query) {
  std::size_t best = 0;
  double best_s = -3.0;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const double s = center_similarity(rows.row(r), query);
    if (s > best_s) {
      best_s = s;
      best = r;
    }
  }
  return best;
}

}  // namespace

std::vector<std::pair<std::int32_t, std::size_t>> cycle_consistent_match(
    const RealMatrix& src_centers, const std::vector<std::int32_t>& src_classes,
    const RealMatrix& tgt_centers) {
  if (src_centers.rows() != src_classes.size())
    throw ContractViolation("cycle_consistent_match: class list size mismatch");
  if (src_centers.rows() == 0 || tgt_centers.rows() == 0)
    throw ContractViolation("cycle_consistent_match: empty center set");

  std::vector<std::pair<std::int32_t, std::size_t>> pairs;
  for (std::size_t s = 0; s < src_centers.rows(); ++s) {
    const std::size_t t = best_row(tgt_centers, src_centers.row(s));
    const std::size_t s_back = best_row(src_centers, tgt_centers.row(t));
    if (s_back == s && center_similarity(src_centers.row(s), tgt_centers.row(t)) > -2.0) {
      pairs.emplace_back(src_classes[s], t);
    }
  }
  return pairs;
}

PseudoLabeling assign_pseudo_labels(
    const std::vector<std::size_t>& assignment,
    const std::vector<std::pair<std::int32_t, std::size_t>>& consensus, std::size_t n_clusters) {
  std::vector<std::int32_t> cluster_class(n_clusters, kUnknownLabel);
  for (const auto& [c, t] : consensus) {
    if (t >= n_clusters) throw ContractViolation("assign_pseudo_labels: cluster out of range");
    cluster_class[t] = c;
  }
  PseudoLabeling out;
  out.cluster_of = assignment;
  out.consensus = consensus;
  out.pseudo_label.resize(assignment.size());
  out.unknown_mask.resize(assignment.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= n_clusters)
      throw ContractViolation("assign_pseudo_labels: assignment out of range");
    out.pseudo_label[i] = cluster_class[assignment[i]];
    out.unknown_mask[i] = out.pseudo_label[i] == kUnknownLabel;
  }
  return out;
}

}  // namespace memspm
