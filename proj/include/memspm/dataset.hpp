#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memspm/matrix.hpp"
#include "memspm/metrics.hpp"

namespace memspm {

enum class Domain : std::uint8_t { source = 0, target = 1 };

// n x d embedding rows with integer labels (-1 = unlabeled). subcluster_ids,
// when present, refine the labels (planted ground truth from the synthetic
// generator). hidden_labels carries ground truth after label hiding; it never
// reaches a file.
struct EmbeddingDataset {
  RealMatrix vectors;
  std::vector<std::int32_t> labels;
  Domain domain = Domain::source;
  std::vector<std::int32_t> subcluster_ids;
  std::vector<std::int32_t> hidden_labels;

  std::size_t size() const { return vectors.rows(); }
  std::size_t dim() const { return vectors.cols(); }
  bool has_subclusters() const { return !subcluster_ids.empty(); }
  bool has_hidden_labels() const { return !hidden_labels.empty(); }

  // max public label + 1 (0 if fully unlabeled)
  std::int32_t num_classes() const;
  // ground truth for evaluation: hidden labels if present, else public
  const std::vector<std::int32_t>& ground_truth() const;
  void validate() const;
};

// Binary format, little-endian, 32-byte header:
//   "MSPM" | u32 version=1 | u32 n | u32 d | u8 domain | u8 has_subclusters |
//   14 zero bytes | n*d float32 vectors | n int32 labels |
//   [n int32 subcluster ids]
void write_dataset(const EmbeddingDataset& ds, const std::string& path);
EmbeddingDataset read_dataset(const std::string& path);

// header "label[,subcluster],f0,...,f{d-1}", one row per sample
EmbeddingDataset import_csv(const std::string& path, Domain domain);

// public labels become ground truth in the hidden channel; -1 outside
EmbeddingDataset hide_labels(const EmbeddingDataset& ds);

// Filter a labeled dataset to the split's classes for the given role. The
// source role keeps its labels; the target role hides them into the
// ground-truth channel.
EmbeddingDataset apply_split(const EmbeddingDataset& ds, const LabelSplit& split, Domain role);

}  // namespace memspm
