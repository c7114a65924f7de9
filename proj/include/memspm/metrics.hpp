#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memspm/matrix.hpp"

namespace memspm {

enum class Scenario { PDA, OSDA, UniDA };

Scenario scenario_from_string(const std::string& s);
std::string scenario_to_string(Scenario s);

// pairwise-disjoint label sets: shared classes, source-only, target-only
struct LabelSplit {
  std::vector<std::int32_t> common;
  std::vector<std::int32_t> source_private;
  std::vector<std::int32_t> target_private;

  std::vector<std::int32_t> source_classes() const;  // common + source_private
  std::vector<std::int32_t> target_classes() const;  // common + target_private
};

// Benchmark splits by registered dataset name (office31, officehome, visda,
// domainnet; case/punctuation-insensitive). Class ids are assigned in
// ascending order: first the shared block, then source-private, then
// target-private.
LabelSplit make_split(Scenario scenario, const std::string& dataset_name);

// explicit counts; validates against the total class count
LabelSplit make_split_counts(std::size_t n_common, std::size_t n_src_private,
                             std::size_t n_tgt_private, std::size_t total_classes);

struct Metrics {
  double os_star = 0.0;                    // unweighted mean accuracy over shared classes
  double unk = 0.0;                        // unknown-rejection accuracy
  double h_score = 0.0;                    // harmonic mean of the two
  std::map<std::int32_t, double> per_class;
  double overall_accuracy = 0.0;           // sample-weighted, for diagnostics
  bool pda = false;                        // no target-private classes
  double pda_accuracy = 0.0;               // plain accuracy (pda only)
  std::vector<std::int32_t> missing_common;  // shared classes absent from the target
};

// 2ab/(a+b); 0 when either input is 0
double h_score(double os_star, double unk);

// predictions use class ids, with kUnknownLabel for rejected samples
Metrics compute_metrics(const std::vector<std::int32_t>& predictions,
                        const std::vector<std::int32_t>& ground_truth, const LabelSplit& split);

// kUnknownLabel when the sample's cluster is outside the consensus set,
// otherwise the classifier argmax
std::int32_t predict_unknown_aware(VecView logits, bool in_consensus_cluster);

// Chance-corrected agreement between two labelings of the same samples.
// nullopt when the index is undefined (degenerate partitions).
std::optional<double> adjusted_rand_index(const std::vector<std::int32_t>& a,
                                          const std::vector<std::int32_t>& b);

}  // namespace memspm
