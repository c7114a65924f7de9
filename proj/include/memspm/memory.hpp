#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "memspm/matrix.hpp"

namespace memspm {

// Non-owning view of a sub-prototype bank: n_items groups of n_subs rows,
// each row a dim-vector, stored as an (n_items * n_subs) x dim matrix.
struct MemoryBank {
  std::size_t n_items = 0;
  std::size_t n_subs = 0;
  std::size_t dim = 0;
  std::size_t top_k = 5;
  double epsilon = 1e-12;
  const RealMatrix* items = nullptr;

  std::size_t flat(std::size_t item, std::size_t sub) const { return item * n_subs + sub; }
  std::span<const double> sub(std::size_t item, std::size_t sub_idx) const {
    return items->row(flat(item, sub_idx));
  }
};

// Seeded init, entries from U(-1/sqrt(dim), +1/sqrt(dim)); any zero-norm row
// is re-drawn so cosine addressing is always defined.
RealMatrix init_memory_items(std::size_t n_items, std::size_t n_subs, std::size_t dim,
                             std::uint64_t seed);

struct AddressingResult {
  RealMatrix full_weights;   // n_items x n_subs, softmax over all cells
  RealMatrix cosines;        // n_items x n_subs, cached for the backward pass
  std::vector<double> query;
  double query_norm = 0.0;
  std::vector<double> row_norms;          // per flat row
  std::vector<std::size_t> argmax_idx;    // per item: selected sub (lowest-index ties)
  std::vector<double> item_max;           // per item: weight of the selected sub
  double lambda = 0.0;                    // adaptive threshold
  std::vector<double> shrunk;             // per item, zero outside the kept set
  std::vector<double> kept_weights;       // per item, L1-renormalized survivors
  std::vector<std::size_t> kept_items;    // ascending indices of survivors
  bool fallback = false;                  // degenerate tie; single item pinned with weight 1

  // cell with the largest kept weight (lowest item index on ties)
  std::pair<std::size_t, std::size_t> dominant_cell() const;
};

// softmax over exp(cos(z, m_ij)) across every cell of the bank
RealMatrix attention_weights(VecView z, const MemoryBank& bank);

// per item: max weight across subs and its lowest attaining index
void per_item_max(const RealMatrix& weights, std::vector<std::size_t>& argmax_idx,
                  std::vector<double>& item_max);

// (top_k + 1)-th largest of item_max (with multiplicity), 0 when n <= top_k.
// With distinct top_k+1 values, exactly top_k items survive the strict
// shrinkage below.
double adaptive_lambda(const std::vector<double>& item_max, std::size_t top_k);

// w -> max(w - lambda, 0) * w / (|w - lambda| + epsilon); zero iff w <= lambda
std::vector<double> threshold_shrink(const std::vector<double>& item_max, double lambda,
                                     double epsilon);

// survivors divided by their L1 sum; zeros stay zero
std::vector<double> renormalize(const std::vector<double>& shrunk);

// full addressing pipeline with all intermediates recorded
AddressingResult address(VecView z, const MemoryBank& bank);

// convex combination of the selected sub-prototype per kept item
std::vector<double> retrieve(const AddressingResult& res, const MemoryBank& bank);

// Reverse-mode gradients of retrieve(address(z)) wrt the bank items and the
// query. Discrete selections (argmax, kept set, lambda) are constants of the
// forward pass; gradients flow through the convex combination, the
// renormalization, the smooth shrinkage branch, and the softmax/cosine chain.
// grad_items has the bank item shape and is accumulated into; grad_query may
// be null.
void backward_retrieve(const AddressingResult& res, const MemoryBank& bank, VecView grad_out,
                       RealMatrix& grad_items, std::vector<double>* grad_query);

// count per flat cell of how often it was the top-weight selection
std::vector<std::size_t> usage_histogram(const std::vector<AddressingResult>& results,
                                         std::size_t n_items, std::size_t n_subs);

}  // namespace memspm
