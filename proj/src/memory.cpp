#include "memspm/memory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "memspm/errors.hpp"
#include "memspm/rng.hpp"

namespace memspm {

RealMatrix init_memory_items(std::size_t n_items, std::size_t n_subs, std::size_t dim,
                             std::uint64_t seed) {
  if (n_items == 0 || n_subs == 0 || dim == 0)
    throw ContractViolation("init_memory_items: zero dimension");
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  RealMatrix items(n_items * n_subs, dim);
  for (std::size_t r = 0; r < items.rows(); ++r) {
    do {
      for (std::size_t c = 0; c < dim; ++c) items(r, c) = rng.uniform(-bound, bound);
    } while (l2_norm(items.row(r)) == 0.0);
  }
  return items;
}

static void check_bank(const MemoryBank& bank) {
  if (bank.items == nullptr) throw ContractViolation("memory: bank has no items");
  if (bank.items->rows() != bank.n_items * bank.n_subs || bank.items->cols() != bank.dim)
    throw ContractViolation("memory: item matrix shape does not match bank");
  if (bank.epsilon <= 0.0) throw ContractViolation("memory: epsilon must be positive");
}

RealMatrix attention_weights(VecView z, const MemoryBank& bank) {
  check_bank(bank);
  if (z.size() != bank.dim) throw ContractViolation("attention_weights: query width mismatch");
  const double zn = l2_norm(z);
  if (zn == 0.0) throw std::domain_error("attention_weights: zero query");

  RealMatrix w(bank.n_items, bank.n_subs);
  for (std::size_t i = 0; i < bank.n_items; ++i) {
    for (std::size_t j = 0; j < bank.n_subs; ++j) {
      auto m = bank.sub(i, j);
      const double mn = l2_norm(m);
      if (mn == 0.0) throw std::domain_error("attention_weights: zero-norm memory row");
      w(i, j) = dot(z, m) / (zn * mn);
    }
  }
  softmax_inplace({w.data(), w.size()});
  return w;
}

void per_item_max(const RealMatrix& weights, std::vector<std::size_t>& argmax_idx,
                  std::vector<double>& item_max) {
  argmax_idx.assign(weights.rows(), 0);
  item_max.assign(weights.rows(), 0.0);
  for (std::size_t i = 0; i < weights.rows(); ++i) {
    std::size_t best = 0;
    double best_w = weights(i, 0);
    for (std::size_t j = 1; j < weights.cols(); ++j) {
      if (weights(i, j) > best_w) {
        best_w = weights(i, j);
        best = j;
      }
    }
    argmax_idx[i] = best;
    item_max[i] = best_w;
  }
}

double adaptive_lambda(const std::vector<double>& item_max, std::size_t top_k) {
  if (item_max.empty()) throw ContractViolation("adaptive_lambda: empty input");
  if (item_max.size() <= top_k) return 0.0;
  std::vector<double> sorted(item_max);
  std::nth_element(sorted.begin(), sorted.begin() + top_k, sorted.end(), std::greater<double>());
  return sorted[top_k];
}

std::vector<double> threshold_shrink(const std::vector<double>& item_max, double lambda,
                                     double epsilon) {
  if (epsilon <= 0.0) throw ContractViolation("threshold_shrink: epsilon must be positive");
  std::vector<double> out(item_max.size(), 0.0);
  for (std::size_t i = 0; i < item_max.size(); ++i) {
    const double w = item_max[i];
    const double r = w - lambda;
    if (r > 0.0) out[i] = r * w / (r + epsilon);
  }
  return out;
}

std::vector<double> renormalize(const std::vector<double>& shrunk) {
  double sum = 0.0;
  for (double v : shrunk) sum += v;
  if (sum <= 0.0) throw ContractViolation("renormalize: no positive entries");
  std::vector<double> out(shrunk.size(), 0.0);
  for (std::size_t i = 0; i < shrunk.size(); ++i) {
    if (shrunk[i] > 0.0) out[i] = shrunk[i] / sum;
  }
  return out;
}

AddressingResult address(VecView z, const MemoryBank& bank) {
  check_bank(bank);
  AddressingResult res;
  res.query.assign(z.begin(), z.end());
  res.query_norm = l2_norm(z);
  if (res.query_norm == 0.0) throw std::domain_error("address: zero query");

  res.cosines = RealMatrix(bank.n_items, bank.n_subs);
  res.row_norms.resize(bank.n_items * bank.n_subs);
  for (std::size_t i = 0; i < bank.n_items; ++i) {
    for (std::size_t j = 0; j < bank.n_subs; ++j) {
      auto m = bank.sub(i, j);
      const double mn = l2_norm(m);
      if (mn == 0.0) throw std::domain_error("address: zero-norm memory row");
      res.row_norms[bank.flat(i, j)] = mn;
      res.cosines(i, j) = dot(z, m) / (res.query_norm * mn);
    }
  }
  res.full_weights = res.cosines;
  softmax_inplace({res.full_weights.data(), res.full_weights.size()});

  per_item_max(res.full_weights, res.argmax_idx, res.item_max);
  res.lambda = adaptive_lambda(res.item_max, bank.top_k);
  res.shrunk = threshold_shrink(res.item_max, res.lambda, bank.epsilon);

  double sum = 0.0;
  for (double v : res.shrunk) sum += v;
  if (sum <= 0.0) {
    // degenerate tie at the threshold: keep the lowest-index argmax item so a
    // query always retrieves something
    std::size_t best = 0;
    for (std::size_t i = 1; i < res.item_max.size(); ++i) {
      if (res.item_max[i] > res.item_max[best]) best = i;
    }
    res.fallback = true;
    res.kept_weights.assign(res.item_max.size(), 0.0);
    res.kept_weights[best] = 1.0;
    res.kept_items = {best};
    return res;
  }

  res.kept_weights = renormalize(res.shrunk);
  for (std::size_t i = 0; i < res.kept_weights.size(); ++i) {
    if (res.kept_weights[i] > 0.0) res.kept_items.push_back(i);
  }
  return res;
}

std::pair<std::size_t, std::size_t> AddressingResult::dominant_cell() const {
  std::size_t best = kept_items.at(0);
  for (std::size_t i : kept_items) {
    if (kept_weights[i] > kept_weights[best]) best = i;
  }
  return {best, argmax_idx[best]};
}

std::vector<double> retrieve(const AddressingResult& res, const MemoryBank& bank) {
  check_bank(bank);
  std::vector<double> out(bank.dim, 0.0);
  for (std::size_t i : res.kept_items) {
    auto m = bank.sub(i, res.argmax_idx[i]);
    const double w = res.kept_weights[i];
    for (std::size_t d = 0; d < bank.dim; ++d) out[d] += w * m[d];
  }
  return out;
}

void backward_retrieve(const AddressingResult& res, const MemoryBank& bank, VecView grad_out,
                       RealMatrix& grad_items, std::vector<double>* grad_query) {
  check_bank(bank);
  if (grad_out.size() != bank.dim) throw ContractViolation("backward_retrieve: grad width");
  if (grad_items.rows() != bank.items->rows() || grad_items.cols() != bank.dim)
    throw ContractViolation("backward_retrieve: grad_items shape");

  if (res.fallback) {
    // pinned weight 1 is a constant; only the direct path contributes
    const std::size_t i = res.kept_items[0];
    auto g = grad_items.row(bank.flat(i, res.argmax_idx[i]));
    for (std::size_t d = 0; d < bank.dim; ++d) g[d] += grad_out[d];
    return;
  }

  // direct path through the convex combination, plus dL/d(normalized weight)
  std::vector<double> g_norm_w(res.kept_items.size(), 0.0);
  for (std::size_t k = 0; k < res.kept_items.size(); ++k) {
    const std::size_t i = res.kept_items[k];
    auto m = bank.sub(i, res.argmax_idx[i]);
    g_norm_w[k] = dot(grad_out, m);
    auto g = grad_items.row(bank.flat(i, res.argmax_idx[i]));
    const double w = res.kept_weights[i];
    for (std::size_t d = 0; d < bank.dim; ++d) g[d] += w * grad_out[d];
  }

  // renormalization: a_i = s_i / sum(s)
  double s_sum = 0.0;
  for (std::size_t i : res.kept_items) s_sum += res.shrunk[i];
  double g_dot_a = 0.0;
  for (std::size_t k = 0; k < res.kept_items.size(); ++k)
    g_dot_a += g_norm_w[k] * res.kept_weights[res.kept_items[k]];

  // shrinkage branch: s = r*w/(r+eps), r = w - lambda > 0 on the kept set
  std::vector<double> g_item_w(res.item_max.size(), 0.0);
  for (std::size_t k = 0; k < res.kept_items.size(); ++k) {
    const std::size_t i = res.kept_items[k];
    const double g_shrunk = (g_norm_w[k] - g_dot_a) / s_sum;
    const double w = res.item_max[i];
    const double r = w - res.lambda;
    const double q = r + bank.epsilon;
    const double dshrink = (r * r + bank.epsilon * (w + r)) / (q * q);
    g_item_w[i] = g_shrunk * dshrink;
  }

  // softmax over all cells; gradient lands only on the selected cell per kept
  // item but couples every cell through the normalizer
  double g_dot_w = 0.0;
  for (std::size_t i : res.kept_items) g_dot_w += g_item_w[i] * res.item_max[i];

  const double zn = res.query_norm;
  std::vector<double> g_z(bank.dim, 0.0);
  for (std::size_t i = 0; i < bank.n_items; ++i) {
    for (std::size_t j = 0; j < bank.n_subs; ++j) {
      const double w_ij = res.full_weights(i, j);
      double g_w = 0.0;
      if (res.argmax_idx[i] == j) g_w = g_item_w[i];
      const double g_cos = w_ij * (g_w - g_dot_w);
      if (g_cos == 0.0) continue;

      const std::size_t f = bank.flat(i, j);
      auto m = bank.sub(i, j);
      const double mn = res.row_norms[f];
      const double c = res.cosines(i, j);
      auto g_m = grad_items.row(f);
      const double inv = 1.0 / (zn * mn);
      const double m_scale = c / (mn * mn);
      const double z_scale = c / (zn * zn);
      for (std::size_t d = 0; d < bank.dim; ++d) {
        g_m[d] += g_cos * (res.query[d] * inv - m_scale * m[d]);
        if (grad_query) g_z[d] += g_cos * (m[d] * inv - z_scale * res.query[d]);
      }
    }
  }
  if (grad_query) {
    if (grad_query->size() != bank.dim) grad_query->assign(bank.dim, 0.0);
    for (std::size_t d = 0; d < bank.dim; ++d) (*grad_query)[d] += g_z[d];
  }
}

std::vector<std::size_t> usage_histogram(const std::vector<AddressingResult>& results,
                                         std::size_t n_items, std::size_t n_subs) {
  if (results.empty()) throw ContractViolation("usage_histogram: empty input");
  std::vector<std::size_t> counts(n_items * n_subs, 0);
  for (const auto& r : results) {
    auto [i, j] = r.dominant_cell();
    counts[i * n_subs + j] += 1;
  }
  return counts;
}

}  // namespace memspm
