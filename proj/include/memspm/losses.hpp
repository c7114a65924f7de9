#pragma once

#include <cstdint>
#include <vector>

#include "memspm/matrix.hpp"

namespace memspm {

constexpr std::int32_t kUnknownLabel = -2;
constexpr std::int32_t kUnlabeled = -1;

struct LossWeights {
  double lambda1 = 0.1;  // cross-domain discrepancy
  double lambda2 = 3.0;  // prediction-entropy regularizer
  double lambda3 = 0.5;  // reconstruction
};

// mean over the batch of -log softmax(logits)[label]
double loss_ce(const RealMatrix& logits, const std::vector<std::int32_t>& labels);
// fills g with d(loss_ce)/d(logits); same shape as logits
double loss_ce_grad(const RealMatrix& logits, const std::vector<std::int32_t>& labels,
                    RealMatrix& g);

// mean per-sample prediction entropy; rows where skip[i] is true are excluded
double loss_reg(const RealMatrix& logits, const std::vector<bool>* skip = nullptr);
double loss_reg_grad(const RealMatrix& logits, const std::vector<bool>* skip, RealMatrix& g);

// mean over batch and dimensions of (xhat - x)^2
double loss_rec(const RealMatrix& xhat, const RealMatrix& x);
double loss_rec_grad(const RealMatrix& xhat, const RealMatrix& x, RealMatrix& g);

// Class-mean discrepancy: shrink per-class cross-domain mean gaps, widen the
// gaps between pooled class means.
//   intra = mean over active classes c of |mu_c^src - mu_c^tgt|^2
//   inter = mean over ordered pairs c != c' of |mu_c - mu_c'|^2 (pooled means)
//   loss  = intra - gamma * inter
// Active classes are consensus classes with samples in both batches; target
// rows labeled kUnknownLabel never participate. Returns 0 when no consensus
// class is present in the batch (n_active reports how many were).
double loss_cdd(const RealMatrix& src_zhat, const std::vector<std::int32_t>& src_labels,
                const RealMatrix& tgt_zhat, const std::vector<std::int32_t>& tgt_pseudo,
                const std::vector<std::int32_t>& consensus_classes, double gamma,
                std::size_t* n_active = nullptr);
double loss_cdd_grad(const RealMatrix& src_zhat, const std::vector<std::int32_t>& src_labels,
                     const RealMatrix& tgt_zhat, const std::vector<std::int32_t>& tgt_pseudo,
                     const std::vector<std::int32_t>& consensus_classes, double gamma,
                     RealMatrix& g_src, RealMatrix& g_tgt, std::size_t* n_active = nullptr);

constexpr double kCddGamma = 0.1;

// ce + lambda1 * cdd + lambda2 * reg + lambda3 * rec
double total_loss(double ce, double cdd, double reg, double rec, const LossWeights& w);

}  // namespace memspm
