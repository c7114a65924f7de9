#include "memspm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "memspm/errors.hpp"
#include "memspm/rng.hpp"

namespace memspm {

RealMatrix make_projection(const EncoderSpec& spec) {
  if (spec.kind == EncoderKind::precomputed) return {};
  if (spec.in_dim == 0 || spec.out_dim == 0)
    throw ContractViolation("make_projection: zero dimension");
  Rng rng(spec.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.in_dim));
  RealMatrix p(spec.out_dim, spec.in_dim);
  for (std::size_t r = 0; r < p.rows(); ++r)
    for (std::size_t c = 0; c < p.cols(); ++c) p(r, c) = rng.normal() * scale;
  return p;
}

std::vector<double> encode(VecView x, const EncoderSpec& spec, const RealMatrix& projection) {
  if (x.size() != spec.in_dim) throw ContractViolation("encode: input width mismatch");
  if (spec.kind == EncoderKind::precomputed) {
    if (spec.in_dim != spec.out_dim)
      throw ContractViolation("encode: precomputed encoder requires in_dim == out_dim");
    return {x.begin(), x.end()};
  }
  std::vector<double> z(spec.out_dim, 0.0);
  for (std::size_t r = 0; r < spec.out_dim; ++r) z[r] = dot(projection.row(r), x);
  return z;
}

static void init_uniform_fan_in(RealMatrix& m, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

Model Model::init(const ModelConfig& cfg) {
  if (cfg.n_classes == 0) throw ContractViolation("Model::init: n_classes must be >= 1");
  if (cfg.encoder.out_dim == 0) throw ContractViolation("Model::init: encoder out_dim");
  if (cfg.memory.enabled && cfg.memory.top_k > cfg.memory.n_items)
    throw ContractViolation("Model::init: top_k must be <= n_items");

  Model model;
  model.cfg = cfg;
  model.projection = make_projection(cfg.encoder);

  const std::size_t d = cfg.encoder.out_dim;
  const std::size_t h = cfg.hidden;
  Rng rng(cfg.init_seed);

  if (cfg.memory.enabled) {
    model.params.create("mem.items", cfg.memory.n_items * cfg.memory.n_subs, d) =
        init_memory_items(cfg.memory.n_items, cfg.memory.n_subs, d, rng.next_u64());
  }
  init_uniform_fan_in(model.params.create("clf.w1", d, h), d, rng);
  init_uniform_fan_in(model.params.create("clf.b1", 1, h), d, rng);
  init_uniform_fan_in(model.params.create("clf.w2", h, cfg.n_classes), h, rng);
  init_uniform_fan_in(model.params.create("clf.b2", 1, cfg.n_classes), h, rng);
  init_uniform_fan_in(model.params.create("dec.v1", d, h), d, rng);
  init_uniform_fan_in(model.params.create("dec.c1", 1, h), d, rng);
  init_uniform_fan_in(model.params.create("dec.v2", h, cfg.encoder.in_dim), h, rng);
  init_uniform_fan_in(model.params.create("dec.c2", 1, cfg.encoder.in_dim), h, rng);
  return model;
}

MemoryBank Model::bank() const {
  if (!cfg.memory.enabled) throw ContractViolation("Model::bank: memory disabled");
  MemoryBank b;
  b.n_items = cfg.memory.n_items;
  b.n_subs = cfg.memory.n_subs;
  b.dim = cfg.encoder.out_dim;
  b.top_k = cfg.memory.top_k;
  b.epsilon = cfg.memory.epsilon;
  b.items = &params.param("mem.items");
  return b;
}

// out = W' in + b for W stored (in x out), b stored (1 x out)
static void affine(const RealMatrix& w, const RealMatrix& b, VecView in,
                   std::vector<double>& out) {
  out.assign(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = in[i];
    if (xi == 0.0) continue;
    auto wr = w.row(i);
    for (std::size_t o = 0; o < w.cols(); ++o) out[o] += xi * wr[o];
  }
  for (std::size_t o = 0; o < w.cols(); ++o) out[o] += b(0, o);
}

static void relu(const std::vector<double>& in, std::vector<double>& out) {
  out.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

static void two_layer_forward(const RealMatrix& w1, const RealMatrix& b1, const RealMatrix& w2,
                              const RealMatrix& b2, VecView in, std::vector<double>& pre,
                              std::vector<double>& hid, std::vector<double>& out) {
  affine(w1, b1, in, pre);
  relu(pre, hid);
  affine(w2, b2, hid, out);
}

std::vector<double> classify(const Model& model, VecView zhat) {
  std::vector<double> pre, hid, logits;
  two_layer_forward(model.params.param("clf.w1"), model.params.param("clf.b1"),
                    model.params.param("clf.w2"), model.params.param("clf.b2"), zhat, pre, hid,
                    logits);
  return logits;
}

std::vector<double> decode(const Model& model, VecView zhat) {
  std::vector<double> pre, hid, xhat;
  two_layer_forward(model.params.param("dec.v1"), model.params.param("dec.c1"),
                    model.params.param("dec.v2"), model.params.param("dec.c2"), zhat, pre, hid,
                    xhat);
  return xhat;
}

std::size_t predict_class(VecView logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

SampleCache forward_sample(const Model& model, VecView x) {
  SampleCache cache;
  cache.z = encode(x, model.cfg.encoder, model.projection);
  if (model.cfg.memory.enabled) {
    MemoryBank b = model.bank();
    cache.addr = address(cache.z, b);
    cache.zhat = retrieve(cache.addr, b);
  } else {
    cache.zhat = cache.z;
  }
  two_layer_forward(model.params.param("clf.w1"), model.params.param("clf.b1"),
                    model.params.param("clf.w2"), model.params.param("clf.b2"), cache.zhat,
                    cache.clf_pre, cache.clf_hid, cache.logits);
  two_layer_forward(model.params.param("dec.v1"), model.params.param("dec.c1"),
                    model.params.param("dec.v2"), model.params.param("dec.c2"), cache.zhat,
                    cache.dec_pre, cache.dec_hid, cache.xhat);
  return cache;
}

std::vector<double> forward_zhat(const Model& model, VecView x) {
  std::vector<double> z = encode(x, model.cfg.encoder, model.projection);
  if (!model.cfg.memory.enabled) return z;
  MemoryBank b = model.bank();
  AddressingResult res = address(z, b);
  return retrieve(res, b);
}

// reverse of two_layer_forward; accumulates weight grads, returns grad wrt in
static void two_layer_backward(const RealMatrix& w1, const RealMatrix& w2, VecView in,
                               const std::vector<double>& pre, const std::vector<double>& hid,
                               VecView g_out, RealMatrix& g_w1, RealMatrix& g_b1,
                               RealMatrix& g_w2, RealMatrix& g_b2, std::vector<double>& g_in) {
  const std::size_t nh = hid.size();
  std::vector<double> g_hid(nh, 0.0);
  for (std::size_t o = 0; o < g_out.size(); ++o) {
    const double g = g_out[o];
    if (g == 0.0) continue;
    g_b2(0, o) += g;
    for (std::size_t i = 0; i < nh; ++i) {
      g_w2(i, o) += hid[i] * g;
      g_hid[i] += w2(i, o) * g;
    }
  }
  for (std::size_t i = 0; i < nh; ++i) {
    if (pre[i] <= 0.0) g_hid[i] = 0.0;  // relu gate
  }
  g_in.assign(in.size(), 0.0);
  for (std::size_t i = 0; i < nh; ++i) {
    const double g = g_hid[i];
    if (g == 0.0) continue;
    g_b1(0, i) += g;
    for (std::size_t d = 0; d < in.size(); ++d) {
      g_w1(d, i) += in[d] * g;
      g_in[d] += w1(d, i) * g;
    }
  }
}

void backward_sample(Model& model, VecView x, const SampleCache& cache, VecView g_logits,
                     VecView g_xhat, VecView g_zhat_direct) {
  (void)x;
  std::vector<double> g_zhat(cache.zhat.size(), 0.0);
  for (std::size_t d = 0; d < g_zhat_direct.size(); ++d) g_zhat[d] += g_zhat_direct[d];

  if (!g_logits.empty()) {
    std::vector<double> g_in;
    two_layer_backward(model.params.param("clf.w1"), model.params.param("clf.w2"), cache.zhat,
                       cache.clf_pre, cache.clf_hid, g_logits, model.params.grad("clf.w1"),
                       model.params.grad("clf.b1"), model.params.grad("clf.w2"),
                       model.params.grad("clf.b2"), g_in);
    for (std::size_t d = 0; d < g_zhat.size(); ++d) g_zhat[d] += g_in[d];
  }
  if (!g_xhat.empty()) {
    std::vector<double> g_in;
    two_layer_backward(model.params.param("dec.v1"), model.params.param("dec.v2"), cache.zhat,
                       cache.dec_pre, cache.dec_hid, g_xhat, model.params.grad("dec.v1"),
                       model.params.grad("dec.c1"), model.params.grad("dec.v2"),
                       model.params.grad("dec.c2"), g_in);
    for (std::size_t d = 0; d < g_zhat.size(); ++d) g_zhat[d] += g_in[d];
  }

  if (model.cfg.memory.enabled) {
    MemoryBank b = model.bank();
    backward_retrieve(cache.addr, b, g_zhat, model.params.grad("mem.items"), nullptr);
  }
  // memory disabled: zhat == z and the encoder is frozen, so nothing upstream
}

std::size_t thread_cap() {
  static const std::size_t cap = [] {
    const char* env = std::getenv("MEMSPM_THREADS");
    if (!env) return std::size_t{1};
    long v = std::strtol(env, nullptr, 10);
    return v > 1 ? static_cast<std::size_t>(v) : std::size_t{1};
  }();
  return cap;
}

}  // namespace memspm
