#include "memspm/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "memspm/errors.hpp"

namespace memspm {

double loss_ce(const RealMatrix& logits, const std::vector<std::int32_t>& labels) {
  RealMatrix g;
  return loss_ce_grad(logits, labels, g);
}

double loss_ce_grad(const RealMatrix& logits, const std::vector<std::int32_t>& labels,
                    RealMatrix& g) {
  if (logits.rows() != labels.size()) throw ContractViolation("loss_ce: batch size mismatch");
  if (logits.rows() == 0) throw ContractViolation("loss_ce: empty batch");
  g = RealMatrix(logits.rows(), logits.cols());
  const double inv_n = 1.0 / static_cast<double>(logits.rows());
  double loss = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const std::int32_t y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols())
      throw ContractViolation("loss_ce: label out of range");
    std::vector<double> p = softmax(logits.row(r));
    loss += -std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      g(r, c) = (p[c] - (c == static_cast<std::size_t>(y) ? 1.0 : 0.0)) * inv_n;
    }
  }
  return loss * inv_n;
}

double loss_reg(const RealMatrix& logits, const std::vector<bool>* skip) {
  RealMatrix g;
  return loss_reg_grad(logits, skip, g);
}

double loss_reg_grad(const RealMatrix& logits, const std::vector<bool>* skip, RealMatrix& g) {
  g = RealMatrix(logits.rows(), logits.cols());
  std::size_t n = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (!(skip && (*skip)[r])) ++n;
  }
  if (n == 0) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (skip && (*skip)[r]) continue;
    std::vector<double> p = softmax(logits.row(r));
    double h = 0.0;
    for (double pc : p) h -= pc * std::log(std::max(pc, 1e-300));
    loss += h;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      const double lp = std::log(std::max(p[c], 1e-300));
      g(r, c) = -p[c] * (lp + h) * inv_n;
    }
  }
  return loss * inv_n;
}

double loss_rec(const RealMatrix& xhat, const RealMatrix& x) {
  RealMatrix g;
  return loss_rec_grad(xhat, x, g);
}

double loss_rec_grad(const RealMatrix& xhat, const RealMatrix& x, RealMatrix& g) {
  if (!xhat.same_shape(x)) throw ContractViolation("loss_rec: shape mismatch");
  if (xhat.size() == 0) throw ContractViolation("loss_rec: empty batch");
  g = RealMatrix(xhat.rows(), xhat.cols());
  const double inv = 1.0 / static_cast<double>(xhat.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < xhat.size(); ++i) {
    const double d = xhat.data()[i] - x.data()[i];
    loss += d * d;
    g.data()[i] = 2.0 * d * inv;
  }
  return loss * inv;
}

namespace {

struct ClassStats {
  std::vector<std::size_t> src_rows, tgt_rows;
  std::vector<double> mu_src, mu_tgt, mu_pooled;
};

// means per active class (consensus AND present in both batches), ascending id
std::map<std::int32_t, ClassStats> active_class_stats(
    const RealMatrix& src_zhat, const std::vector<std::int32_t>& src_labels,
    const RealMatrix& tgt_zhat, const std::vector<std::int32_t>& tgt_pseudo,
    const std::vector<std::int32_t>& consensus_classes) {
  std::map<std::int32_t, ClassStats> stats;
  for (std::int32_t c : consensus_classes) stats[c] = {};
  for (std::size_t r = 0; r < src_labels.size(); ++r) {
    auto it = stats.find(src_labels[r]);
    if (it != stats.end()) it->second.src_rows.push_back(r);
  }
  for (std::size_t r = 0; r < tgt_pseudo.size(); ++r) {
    if (tgt_pseudo[r] == kUnknownLabel) continue;
    auto it = stats.find(tgt_pseudo[r]);
    if (it != stats.end()) it->second.tgt_rows.push_back(r);
  }
  for (auto it = stats.begin(); it != stats.end();) {
    if (it->second.src_rows.empty() || it->second.tgt_rows.empty()) {
      it = stats.erase(it);
      continue;
    }
    const std::size_t d = src_zhat.cols();
    ClassStats& cs = it->second;
    cs.mu_src.assign(d, 0.0);
    cs.mu_tgt.assign(d, 0.0);
    cs.mu_pooled.assign(d, 0.0);
    for (std::size_t r : cs.src_rows)
      for (std::size_t k = 0; k < d; ++k) cs.mu_src[k] += src_zhat(r, k);
    for (std::size_t k = 0; k < d; ++k) cs.mu_src[k] /= static_cast<double>(cs.src_rows.size());
    for (std::size_t r : cs.tgt_rows)
      for (std::size_t k = 0; k < d; ++k) cs.mu_tgt[k] += tgt_zhat(r, k);
    for (std::size_t k = 0; k < d; ++k) cs.mu_tgt[k] /= static_cast<double>(cs.tgt_rows.size());
    const double pooled_n = static_cast<double>(cs.src_rows.size() + cs.tgt_rows.size());
    for (std::size_t k = 0; k < d; ++k) {
      cs.mu_pooled[k] =
          (cs.mu_src[k] * static_cast<double>(cs.src_rows.size()) +
           cs.mu_tgt[k] * static_cast<double>(cs.tgt_rows.size())) /
          pooled_n;
    }
    ++it;
  }
  return stats;
}

}  // namespace

double loss_cdd(const RealMatrix& src_zhat, const std::vector<std::int32_t>& src_labels,
                const RealMatrix& tgt_zhat, const std::vector<std::int32_t>& tgt_pseudo,
                const std::vector<std::int32_t>& consensus_classes, double gamma,
                std::size_t* n_active) {
  RealMatrix gs, gt;
  return loss_cdd_grad(src_zhat, src_labels, tgt_zhat, tgt_pseudo, consensus_classes, gamma, gs,
                       gt, n_active);
}

double loss_cdd_grad(const RealMatrix& src_zhat, const std::vector<std::int32_t>& src_labels,
                     const RealMatrix& tgt_zhat, const std::vector<std::int32_t>& tgt_pseudo,
                     const std::vector<std::int32_t>& consensus_classes, double gamma,
                     RealMatrix& g_src, RealMatrix& g_tgt, std::size_t* n_active) {
  if (src_zhat.rows() != src_labels.size() || tgt_zhat.rows() != tgt_pseudo.size())
    throw ContractViolation("loss_cdd: batch size mismatch");
  if (src_zhat.cols() != tgt_zhat.cols()) throw ContractViolation("loss_cdd: width mismatch");
  g_src = RealMatrix(src_zhat.rows(), src_zhat.cols());
  g_tgt = RealMatrix(tgt_zhat.rows(), tgt_zhat.cols());

  auto stats = active_class_stats(src_zhat, src_labels, tgt_zhat, tgt_pseudo, consensus_classes);
  if (n_active) *n_active = stats.size();
  if (stats.empty()) return 0.0;

  const std::size_t d = src_zhat.cols();
  const double m = static_cast<double>(stats.size());

  double intra = 0.0;
  for (auto& [c, cs] : stats) {
    double gap = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = cs.mu_src[k] - cs.mu_tgt[k];
      gap += diff * diff;
    }
    intra += gap;
    // d(intra)/d(sample) through the two domain means
    const double s_scale = 2.0 / (m * static_cast<double>(cs.src_rows.size()));
    const double t_scale = -2.0 / (m * static_cast<double>(cs.tgt_rows.size()));
    for (std::size_t r : cs.src_rows)
      for (std::size_t k = 0; k < d; ++k)
        g_src(r, k) += s_scale * (cs.mu_src[k] - cs.mu_tgt[k]);
    for (std::size_t r : cs.tgt_rows)
      for (std::size_t k = 0; k < d; ++k)
        g_tgt(r, k) += t_scale * (cs.mu_src[k] - cs.mu_tgt[k]);
  }
  intra /= m;

  double inter = 0.0;
  if (stats.size() >= 2) {
    const double pairs = m * (m - 1.0);
    for (auto& [c, cs] : stats) {
      std::vector<double> pull(d, 0.0);  // sum over c' != c of (mu_c - mu_c')
      for (auto& [c2, cs2] : stats) {
        if (c2 == c) continue;
        double gap = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = cs.mu_pooled[k] - cs2.mu_pooled[k];
          pull[k] += diff;
          gap += diff * diff;
        }
        inter += gap;  // ordered pairs: each unordered pair counted twice
      }
      const double pooled_n = static_cast<double>(cs.src_rows.size() + cs.tgt_rows.size());
      const double scale = -gamma * 4.0 / (pairs * pooled_n);
      for (std::size_t r : cs.src_rows)
        for (std::size_t k = 0; k < d; ++k) g_src(r, k) += scale * pull[k];
      for (std::size_t r : cs.tgt_rows)
        for (std::size_t k = 0; k < d; ++k) g_tgt(r, k) += scale * pull[k];
    }
    inter /= pairs;
  }
  return intra - gamma * inter;
}

double total_loss(double ce, double cdd, double reg, double rec, const LossWeights& w) {
  return ce + w.lambda1 * cdd + w.lambda2 * reg + w.lambda3 * rec;
}

}  // namespace memspm
