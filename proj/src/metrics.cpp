#include "memspm/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "memspm/errors.hpp"
#include "memspm/losses.hpp"
#include "memspm/model.hpp"

namespace memspm {

Scenario scenario_from_string(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "PDA") return Scenario::PDA;
  if (u == "OSDA") return Scenario::OSDA;
  if (u == "UNIDA") return Scenario::UniDA;
  throw ContractViolation("unknown scenario: " + s);
}

std::string scenario_to_string(Scenario s) {
  switch (s) {
    case Scenario::PDA: return "PDA";
    case Scenario::OSDA: return "OSDA";
    default: return "UniDA";
  }
}

std::vector<std::int32_t> LabelSplit::source_classes() const {
  std::vector<std::int32_t> out(common);
  out.insert(out.end(), source_private.begin(), source_private.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::int32_t> LabelSplit::target_classes() const {
  std::vector<std::int32_t> out(common);
  out.insert(out.end(), target_private.begin(), target_private.end());
  std::sort(out.begin(), out.end());
  return out;
}

LabelSplit make_split_counts(std::size_t n_common, std::size_t n_src_private,
                             std::size_t n_tgt_private, std::size_t total_classes) {
  if (n_common + n_src_private + n_tgt_private > total_classes)
    throw ContractViolation("make_split: split counts exceed total class count");
  LabelSplit split;
  std::int32_t next = 0;
  for (std::size_t i = 0; i < n_common; ++i) split.common.push_back(next++);
  for (std::size_t i = 0; i < n_src_private; ++i) split.source_private.push_back(next++);
  for (std::size_t i = 0; i < n_tgt_private; ++i) split.target_private.push_back(next++);
  return split;
}

namespace {

std::string normalize_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (c == '-' || c == '_' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

struct DatasetSplits {
  std::size_t total;
  // {common, src_private, tgt_private} per scenario; total==0 marks undefined
  std::size_t pda[3], osda[3], unida[3];
};

const std::map<std::string, DatasetSplits>& registry() {
  static const std::map<std::string, DatasetSplits> reg = {
      {"office31", {31, {10, 21, 0}, {10, 0, 11}, {10, 10, 11}}},
      {"officehome", {65, {25, 40, 0}, {25, 0, 40}, {10, 5, 50}}},
      {"visda", {12, {6, 6, 0}, {6, 0, 6}, {6, 3, 3}}},
      {"domainnet", {345, {0, 0, 0}, {0, 0, 0}, {150, 50, 145}}},
  };
  return reg;
}

}  // namespace

LabelSplit make_split(Scenario scenario, const std::string& dataset_name) {
  const std::string key = normalize_name(dataset_name);
  auto it = registry().find(key);
  if (it == registry().end())
    throw ContractViolation("make_split: unregistered dataset " + dataset_name);
  const DatasetSplits& ds = it->second;
  const std::size_t* counts = scenario == Scenario::PDA    ? ds.pda
                              : scenario == Scenario::OSDA ? ds.osda
                                                           : ds.unida;
  if (counts[0] == 0)
    throw ContractViolation("make_split: scenario not defined for " + dataset_name);
  return make_split_counts(counts[0], counts[1], counts[2], ds.total);
}

double h_score(double os_star, double unk) {
  if (os_star <= 0.0 || unk <= 0.0) return 0.0;
  return 2.0 * os_star * unk / (os_star + unk);
}

std::int32_t predict_unknown_aware(VecView logits, bool in_consensus_cluster) {
  if (!in_consensus_cluster) return kUnknownLabel;
  return static_cast<std::int32_t>(predict_class(logits));
}

Metrics compute_metrics(const std::vector<std::int32_t>& predictions,
                        const std::vector<std::int32_t>& ground_truth, const LabelSplit& split) {
  if (predictions.size() != ground_truth.size())
    throw ContractViolation("compute_metrics: size mismatch");
  if (predictions.empty()) throw ContractViolation("compute_metrics: empty input");

  const std::set<std::int32_t> common(split.common.begin(), split.common.end());
  const std::set<std::int32_t> tgt_private(split.target_private.begin(),
                                           split.target_private.end());
  std::map<std::int32_t, std::pair<std::size_t, std::size_t>> per_class;  // correct, total
  std::size_t unk_total = 0, unk_correct = 0, overall_correct = 0;

  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const std::int32_t gt = ground_truth[i];
    const std::int32_t pred = predictions[i];
    const bool gt_private = tgt_private.count(gt) != 0;
    if (!gt_private && common.count(gt) == 0)
      throw ContractViolation("compute_metrics: ground truth outside the target label set");
    if (gt_private) {
      unk_total += 1;
      if (pred == kUnknownLabel) {
        unk_correct += 1;
        overall_correct += 1;
      }
    } else {
      auto& [correct, total] = per_class[gt];
      total += 1;
      if (pred == gt) {
        correct += 1;
        overall_correct += 1;
      }
    }
  }

  Metrics m;
  m.overall_accuracy =
      static_cast<double>(overall_correct) / static_cast<double>(predictions.size());

  double acc_sum = 0.0;
  std::size_t present = 0;
  for (std::int32_t c : split.common) {
    auto it = per_class.find(c);
    if (it == per_class.end()) {
      m.missing_common.push_back(c);
      continue;
    }
    const double acc =
        static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
    m.per_class[c] = acc;
    acc_sum += acc;
    present += 1;
  }
  m.os_star = present > 0 ? acc_sum / static_cast<double>(present) : 0.0;

  if (split.target_private.empty()) {
    m.pda = true;
    m.pda_accuracy = m.overall_accuracy;
    m.unk = 0.0;
    m.h_score = 0.0;
    return m;
  }
  m.unk = unk_total > 0 ? static_cast<double>(unk_correct) / static_cast<double>(unk_total) : 0.0;
  m.h_score = h_score(m.os_star, m.unk);
  return m;
}

std::optional<double> adjusted_rand_index(const std::vector<std::int32_t>& a,
                                          const std::vector<std::int32_t>& b) {
  if (a.size() != b.size()) throw ContractViolation("adjusted_rand_index: size mismatch");
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;

  std::map<std::pair<std::int32_t, std::int32_t>, std::size_t> cells;
  std::map<std::int32_t, std::size_t> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    cells[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto choose2 = [](std::size_t x) {
    return static_cast<double>(x) * static_cast<double>(x - 1) / 2.0;
  };
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, c] : cells) sum_cells += choose2(c);
  for (const auto& [key, c] : rows) sum_rows += choose2(c);
  for (const auto& [key, c] : cols) sum_cols += choose2(c);
  const double total = choose2(n);
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  const double denom = max_index - expected;
  if (denom == 0.0) return std::nullopt;
  return (sum_cells - expected) / denom;
}

}  // namespace memspm
