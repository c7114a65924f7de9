#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memspm/matrix.hpp"
#include "memspm/memory.hpp"
#include "memspm/param_store.hpp"

namespace memspm {

enum class EncoderKind { precomputed, random_projection };

// Frozen map from raw input vectors to addressing queries. The projection
// matrix is generated once from the seed and never updated.
struct EncoderSpec {
  EncoderKind kind = EncoderKind::precomputed;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::uint64_t seed = 0;
};

// out_dim x in_dim, rows from a seeded standard normal scaled by 1/sqrt(in_dim);
// empty for the precomputed (identity) encoder
RealMatrix make_projection(const EncoderSpec& spec);

std::vector<double> encode(VecView x, const EncoderSpec& spec, const RealMatrix& projection);

struct MemoryConfig {
  bool enabled = true;
  std::size_t n_items = 64;
  std::size_t n_subs = 30;
  std::size_t top_k = 5;
  double epsilon = 1e-12;
};

struct ModelConfig {
  EncoderSpec encoder;
  MemoryConfig memory;
  std::size_t hidden = 256;
  std::size_t n_classes = 0;
  std::uint64_t init_seed = 1;
};

// Learnable state: the sub-prototype bank plus two-layer classifier and
// decoder heads. All parameters live in the store under canonical names
// ("mem.items", "clf.w1", "clf.b1", "clf.w2", "clf.b2", "dec.v1", "dec.c1",
// "dec.v2", "dec.c2"); the frozen encoder never appears there.
struct Model {
  ModelConfig cfg;
  ParamStore params;
  RealMatrix projection;
  std::uint64_t iteration = 0;

  static Model init(const ModelConfig& cfg);

  MemoryBank bank() const;
  std::size_t embed_dim() const { return cfg.encoder.out_dim; }
};

// classifier head on the task-oriented embedding: w2' relu(w1' zhat + b1) + b2
std::vector<double> classify(const Model& model, VecView zhat);
// decoder head back to the raw input width
std::vector<double> decode(const Model& model, VecView zhat);

// lowest-index argmax over logits
std::size_t predict_class(VecView logits);

struct SampleCache {
  std::vector<double> z;
  AddressingResult addr;  // unused when the memory is disabled
  std::vector<double> zhat;
  std::vector<double> clf_pre, clf_hid, logits;
  std::vector<double> dec_pre, dec_hid, xhat;
};

// deterministic composition encode -> address -> retrieve -> (classify, decode)
SampleCache forward_sample(const Model& model, VecView x);

// encode -> address -> retrieve only (pseudo-label refresh path)
std::vector<double> forward_zhat(const Model& model, VecView x);

// Accumulate gradients for one sample into model.params. g_logits / g_xhat /
// g_zhat_direct are the loss gradients at the three outputs (any may be
// empty); scales must already be folded in by the caller.
void backward_sample(Model& model, VecView x, const SampleCache& cache, VecView g_logits,
                     VecView g_xhat, VecView g_zhat_direct);

// MEMSPM_THREADS cap (>= 1); read once per process
std::size_t thread_cap();

}  // namespace memspm
