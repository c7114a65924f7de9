#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memspm/consensus.hpp"
#include "memspm/dataset.hpp"
#include "memspm/losses.hpp"
#include "memspm/model.hpp"
#include "memspm/sgd.hpp"

namespace memspm {

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  SgdConfig sgd;
  LossWeights loss_weights;
  std::size_t refresh_every = 1;  // epochs between pseudo-label refreshes
  std::size_t k_target = 0;       // target cluster count; 0 = n_classes + 4
  std::uint64_t seed = 1;
};

struct EpochStats {
  std::size_t epoch = 0;
  double ce = 0.0, cdd = 0.0, reg = 0.0, rec = 0.0, total = 0.0;
  double lr = 0.0;  // rate at the epoch's first step
  std::size_t n_consensus = 0;
  std::size_t n_unknown = 0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

// task-oriented embeddings for every row (MEMSPM_THREADS-parallel, determinism
// unaffected: outputs land in disjoint rows)
RealMatrix batch_zhat(const Model& model, const EmbeddingDataset& ds);

struct PseudoRefresh {
  PseudoLabeling pseudo;
  RealMatrix src_zhat, tgt_zhat;
  RealMatrix src_centers;
  std::vector<std::int32_t> src_center_classes;
  RealMatrix tgt_centers;
};

// forward both domains, cluster the target, and match clusters to source
// class centers by mutual nearest neighbors
PseudoRefresh refresh_pseudo_labels(const Model& model, const EmbeddingDataset& source,
                                    const EmbeddingDataset& target, std::size_t k_target,
                                    std::uint64_t seed);

struct BatchLossStats {
  double ce = 0.0, cdd = 0.0, reg = 0.0, rec = 0.0, total = 0.0;
  double min_threshold_margin = 0.0;  // min over samples of min_i |item_max_i - lambda|
  double min_relu_margin = 0.0;       // min |pre-activation| across both heads
  std::size_t fallbacks = 0;
};

// One objective evaluation over a paired batch: cross-entropy on the source,
// entropy regularizer on non-unknown targets, class-mean discrepancy across
// domains, reconstruction on the union. With with_grads, accumulates analytic
// gradients into model.params. This is the single loss graph shared by the
// trainer and the gradient checker.
BatchLossStats batch_loss(Model& model, const RealMatrix& src_x,
                          const std::vector<std::int32_t>& src_labels, const RealMatrix& tgt_x,
                          const std::vector<std::int32_t>& tgt_pseudo,
                          const std::vector<std::int32_t>& consensus_classes,
                          const LossWeights& weights, bool with_grads);

// Alternates pseudo-label refreshes with mini-batch updates of the full
// objective. Deterministic given cfg.seed. Source must be fully labeled,
// target fully unlabeled.
TrainHistory train(Model& model, const EmbeddingDataset& source, const EmbeddingDataset& target,
                   const TrainConfig& cfg);

}  // namespace memspm
