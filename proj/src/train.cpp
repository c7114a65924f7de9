#include "memspm/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include "memspm/errors.hpp"
#include "memspm/kmeans.hpp"
#include "memspm/rng.hpp"

namespace memspm {

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,ce,cdd,reg,rec,total,lr,n_consensus,n_unknown\n";
  char buf[256];
  for (const EpochStats& e : epochs) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%zu\n", e.epoch,
                  e.ce, e.cdd, e.reg, e.rec, e.total, e.lr, e.n_consensus, e.n_unknown);
    out += buf;
  }
  return out;
}

void TrainHistory::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("TrainHistory: cannot open " + path);
  out << to_csv();
  if (!out) throw IoError("TrainHistory: write failed for " + path);
}

namespace {

void parallel_rows(std::size_t n, const std::function<void(std::size_t, std::size_t)>& work) {
  const std::size_t threads = std::min(thread_cap(), std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    work(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&work, lo, hi] { work(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

void forward_rows(const Model& model, const RealMatrix& x, std::vector<SampleCache>& caches) {
  caches.resize(x.rows());
  parallel_rows(x.rows(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) caches[i] = forward_sample(model, x.row(i));
  });
}

double addressing_margin(const AddressingResult& addr) {
  double margin = std::numeric_limits<double>::infinity();
  for (double u : addr.item_max) margin = std::min(margin, std::abs(u - addr.lambda));
  return margin;
}

double relu_margin(const SampleCache& cache) {
  double margin = std::numeric_limits<double>::infinity();
  for (double p : cache.clf_pre) margin = std::min(margin, std::abs(p));
  for (double p : cache.dec_pre) margin = std::min(margin, std::abs(p));
  return margin;
}

// deterministic index stream that reshuffles on wraparound
class BatchStream {
 public:
  BatchStream(std::size_t n, std::uint64_t seed) : rng_(seed), order_(n) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng_.shuffle(order_);
  }
  void next(std::size_t count, std::vector<std::size_t>& out) {
    out.clear();
    for (std::size_t i = 0; i < count; ++i) {
      if (cursor_ == order_.size()) {
        rng_.shuffle(order_);
        cursor_ = 0;
      }
      out.push_back(order_[cursor_++]);
    }
  }

 private:
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

RealMatrix gather_rows(const RealMatrix& src, const std::vector<std::size_t>& idx) {
  RealMatrix out(idx.size(), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto r = src.row(idx[i]);
    std::copy(r.begin(), r.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

RealMatrix batch_zhat(const Model& model, const EmbeddingDataset& ds) {
  RealMatrix out(ds.size(), model.embed_dim());
  parallel_rows(ds.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      std::vector<double> zhat = forward_zhat(model, ds.vectors.row(i));
      std::copy(zhat.begin(), zhat.end(), out.row(i).begin());
    }
  });
  return out;
}

PseudoRefresh refresh_pseudo_labels(const Model& model, const EmbeddingDataset& source,
                                    const EmbeddingDataset& target, std::size_t k_target,
                                    std::uint64_t seed) {
  if (k_target == 0) throw ContractViolation("refresh_pseudo_labels: k_target must be >= 1");
  PseudoRefresh r;
  r.src_zhat = batch_zhat(model, source);
  r.tgt_zhat = batch_zhat(model, target);
  r.src_centers = class_centers(r.src_zhat, source.labels, r.src_center_classes);

  KmeansResult km = kmeans(r.tgt_zhat, std::min(k_target, target.size()), seed);
  r.tgt_centers = km.centers;
  auto consensus = cycle_consistent_match(r.src_centers, r.src_center_classes, r.tgt_centers);
  r.pseudo = assign_pseudo_labels(km.assignment, consensus, km.centers.rows());
  return r;
}

BatchLossStats batch_loss(Model& model, const RealMatrix& src_x,
                          const std::vector<std::int32_t>& src_labels, const RealMatrix& tgt_x,
                          const std::vector<std::int32_t>& tgt_pseudo,
                          const std::vector<std::int32_t>& consensus_classes,
                          const LossWeights& weights, bool with_grads) {
  const std::size_t ns = src_x.rows(), nt = tgt_x.rows();
  if (ns == 0 || src_labels.size() != ns || tgt_pseudo.size() != nt)
    throw ContractViolation("batch_loss: batch shape mismatch");

  std::vector<SampleCache> src_caches, tgt_caches;
  forward_rows(model, src_x, src_caches);
  forward_rows(model, tgt_x, tgt_caches);

  const std::size_t n_classes = model.cfg.n_classes;
  const std::size_t d_embed = model.embed_dim();
  const std::size_t d_in = model.cfg.encoder.in_dim;

  BatchLossStats stats;
  stats.min_threshold_margin = std::numeric_limits<double>::infinity();
  stats.min_relu_margin = std::numeric_limits<double>::infinity();

  RealMatrix src_logits(ns, n_classes), tgt_logits(nt, n_classes);
  RealMatrix src_zh(ns, d_embed), tgt_zh(nt, d_embed);
  RealMatrix xhat(ns + nt, d_in), x(ns + nt, d_in);
  std::vector<bool> tgt_skip(nt, false);
  for (std::size_t i = 0; i < ns; ++i) {
    const SampleCache& c = src_caches[i];
    std::copy(c.logits.begin(), c.logits.end(), src_logits.row(i).begin());
    std::copy(c.zhat.begin(), c.zhat.end(), src_zh.row(i).begin());
    std::copy(c.xhat.begin(), c.xhat.end(), xhat.row(i).begin());
    auto xr = src_x.row(i);
    std::copy(xr.begin(), xr.end(), x.row(i).begin());
    stats.min_relu_margin = std::min(stats.min_relu_margin, relu_margin(c));
    if (model.cfg.memory.enabled) {
      stats.min_threshold_margin = std::min(stats.min_threshold_margin, addressing_margin(c.addr));
      if (c.addr.fallback) ++stats.fallbacks;
    }
  }
  for (std::size_t i = 0; i < nt; ++i) {
    const SampleCache& c = tgt_caches[i];
    std::copy(c.logits.begin(), c.logits.end(), tgt_logits.row(i).begin());
    std::copy(c.zhat.begin(), c.zhat.end(), tgt_zh.row(i).begin());
    std::copy(c.xhat.begin(), c.xhat.end(), xhat.row(ns + i).begin());
    auto xr = tgt_x.row(i);
    std::copy(xr.begin(), xr.end(), x.row(ns + i).begin());
    tgt_skip[i] = tgt_pseudo[i] == kUnknownLabel;
    stats.min_relu_margin = std::min(stats.min_relu_margin, relu_margin(c));
    if (model.cfg.memory.enabled) {
      stats.min_threshold_margin = std::min(stats.min_threshold_margin, addressing_margin(c.addr));
      if (c.addr.fallback) ++stats.fallbacks;
    }
  }

  RealMatrix g_ce, g_reg, g_rec, g_cdd_src, g_cdd_tgt;
  stats.ce = loss_ce_grad(src_logits, src_labels, g_ce);
  stats.reg = nt > 0 ? loss_reg_grad(tgt_logits, &tgt_skip, g_reg) : 0.0;
  stats.rec = loss_rec_grad(xhat, x, g_rec);
  stats.cdd = nt > 0 ? loss_cdd_grad(src_zh, src_labels, tgt_zh, tgt_pseudo, consensus_classes,
                                     kCddGamma, g_cdd_src, g_cdd_tgt)
                     : 0.0;
  stats.total = total_loss(stats.ce, stats.cdd, stats.reg, stats.rec, weights);
  if (!with_grads) return stats;

  const double l1 = weights.lambda1, l2 = weights.lambda2, l3 = weights.lambda3;
  std::vector<double> g_logits(n_classes), g_xhat(d_in), g_zhat(d_embed);
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t k = 0; k < n_classes; ++k) g_logits[k] = g_ce(i, k);
    for (std::size_t k = 0; k < d_in; ++k) g_xhat[k] = l3 * g_rec(i, k);
    for (std::size_t k = 0; k < d_embed; ++k)
      g_zhat[k] = nt > 0 ? l1 * g_cdd_src(i, k) : 0.0;
    backward_sample(model, src_x.row(i), src_caches[i], g_logits, g_xhat, g_zhat);
  }
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t k = 0; k < n_classes; ++k) g_logits[k] = l2 * g_reg(i, k);
    for (std::size_t k = 0; k < d_in; ++k) g_xhat[k] = l3 * g_rec(ns + i, k);
    for (std::size_t k = 0; k < d_embed; ++k) g_zhat[k] = l1 * g_cdd_tgt(i, k);
    backward_sample(model, tgt_x.row(i), tgt_caches[i], g_logits, g_xhat, g_zhat);
  }
  return stats;
}

TrainHistory train(Model& model, const EmbeddingDataset& source, const EmbeddingDataset& target,
                   const TrainConfig& cfg) {
  source.validate();
  target.validate();
  if (cfg.refresh_every == 0) throw ContractViolation("train: refresh_every must be >= 1");
  if (cfg.batch_size == 0) throw ContractViolation("train: batch_size must be >= 1");
  if (source.dim() != target.dim()) throw ContractViolation("train: embedding width mismatch");
  if (source.dim() != model.cfg.encoder.in_dim)
    throw ContractViolation("train: dataset width does not match the encoder");
  for (std::int32_t l : source.labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= model.cfg.n_classes)
      throw ContractViolation("train: source label outside [0, n_classes)");
  }
  for (std::int32_t l : target.labels) {
    if (l != kUnlabeled) throw ContractViolation("train: target must be unlabeled");
  }

  TrainHistory history;
  if (cfg.epochs == 0) return history;

  const std::size_t steps_per_epoch =
      (std::max(source.size(), target.size()) + cfg.batch_size - 1) / cfg.batch_size;
  SgdConfig sgd = cfg.sgd;
  sgd.total_iters = std::max<std::size_t>(1, cfg.epochs * steps_per_epoch);
  const std::size_t k_target = cfg.k_target > 0 ? cfg.k_target : model.cfg.n_classes + 4;

  BatchStream src_stream(source.size(), Rng::derive(cfg.seed, 1));
  BatchStream tgt_stream(target.size(), Rng::derive(cfg.seed, 2));

  PseudoLabeling pseudo;
  std::vector<std::int32_t> consensus_classes;
  std::vector<std::size_t> src_idx, tgt_idx;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch % cfg.refresh_every == 0) {
      PseudoRefresh refresh = refresh_pseudo_labels(model, source, target, k_target,
                                                    Rng::derive(cfg.seed, 1000 + epoch));
      pseudo = std::move(refresh.pseudo);
      consensus_classes = pseudo.consensus_classes();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr_at(sgd, model.iteration);
    stats.n_consensus = pseudo.consensus.size();
    stats.n_unknown = pseudo.unknown_count();
    std::size_t fallbacks = 0;

    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      src_stream.next(cfg.batch_size, src_idx);
      tgt_stream.next(cfg.batch_size, tgt_idx);
      RealMatrix src_x = gather_rows(source.vectors, src_idx);
      RealMatrix tgt_x = gather_rows(target.vectors, tgt_idx);
      std::vector<std::int32_t> src_labels(src_idx.size()), tgt_pseudo(tgt_idx.size());
      for (std::size_t i = 0; i < src_idx.size(); ++i) src_labels[i] = source.labels[src_idx[i]];
      for (std::size_t i = 0; i < tgt_idx.size(); ++i)
        tgt_pseudo[i] = pseudo.pseudo_label[tgt_idx[i]];

      BatchLossStats step_stats = batch_loss(model, src_x, src_labels, tgt_x, tgt_pseudo,
                                             consensus_classes, cfg.loss_weights, true);
      if (!std::isfinite(step_stats.total)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           " batch " + std::to_string(step));
      }
      stats.ce += step_stats.ce;
      stats.cdd += step_stats.cdd;
      stats.reg += step_stats.reg;
      stats.rec += step_stats.rec;
      stats.total += step_stats.total;
      fallbacks += step_stats.fallbacks;

      sgd_step(model.params, sgd, model.iteration);
      model.iteration += 1;
    }

    const double inv_steps = 1.0 / static_cast<double>(steps_per_epoch);
    stats.ce *= inv_steps;
    stats.cdd *= inv_steps;
    stats.reg *= inv_steps;
    stats.rec *= inv_steps;
    stats.total *= inv_steps;
    history.epochs.push_back(stats);
    if (fallbacks > 0) {
      std::fprintf(stderr, "train: epoch %zu had %zu degenerate addressing fallbacks\n", epoch,
                   fallbacks);
    }
  }
  return history;
}

}  // namespace memspm
