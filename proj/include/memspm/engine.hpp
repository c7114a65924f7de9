#pragma once

#include <map>
#include <optional>
#include <string>

#include "memspm/dataset.hpp"
#include "memspm/grad_check.hpp"
#include "memspm/metrics.hpp"
#include "memspm/model.hpp"
#include "memspm/synthetic.hpp"
#include "memspm/train.hpp"

namespace memspm {

// JSON bridges. Parsing is lenient about missing fields (defaults apply) and
// strict about types and value ranges.
ModelConfig model_config_from_json(const std::string& json_text);
std::string model_config_to_json(const ModelConfig& cfg);
TrainConfig train_config_from_json(const std::string& json_text);
std::string train_config_to_json(const TrainConfig& cfg);
SyntheticSpec synthetic_spec_from_json(const std::string& json_text);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);

// Binary checkpoint, bit-exact round trip:
//   "MSPC" | u32 version=1 | u64 iteration | u32 config_len | config JSON |
//   u32 n_params | per param: u32 name_len, name, u32 rows, u32 cols,
//   rows*cols float64
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

struct EvalOptions {
  std::size_t k_target = 0;  // 0 = n_classes + 4
  std::uint64_t seed = 1;
  std::optional<LabelSplit> split;  // derived from the ground truth when absent
};

struct EvalResult {
  Metrics metrics;
  std::size_t n_consensus = 0;
  std::vector<std::int32_t> predictions;
  std::string to_json() const;
};

// Refresh pseudo-labels with the given model, gate unknowns by cluster
// consensus, classify the rest, and score against the target ground truth.
EvalResult evaluate(const Model& model, const EmbeddingDataset& source,
                    const EmbeddingDataset& target, const EvalOptions& options);

struct InspectResult {
  std::size_t n_samples = 0;
  std::size_t n_used_cells = 0;
  std::map<std::int32_t, double> ari_per_class;
  std::optional<double> ari_mean;          // within-class mean; absent if undefined
  std::optional<double> decode_match_frac; // decoded cells landing on their users' sub-cluster
  std::string report_json;
};

// Writes usage.csv, assignments.csv, pca_zhat.csv, pca_memory.csv,
// decoded.csv and report.json under out_dir (created if needed) and returns
// the aggregate report.
InspectResult inspect(const Model& model, const EmbeddingDataset& data,
                      const std::string& out_dir);

struct GradcheckOptions {
  std::size_t n_items = 8;
  std::size_t n_subs = 3;
  std::size_t top_k = 3;
  std::size_t dim = 8;
  std::size_t in_dim = 8;
  std::size_t hidden = 16;
  std::size_t n_classes = 3;
  std::size_t batch = 4;   // per domain
  std::size_t draws = 20;
  double step = 1e-5;
  double tol = 1e-4;
  std::uint64_t seed = 1;
};
GradcheckOptions gradcheck_options_from_json(const std::string& json_text);
std::string gradcheck_options_to_json(const GradcheckOptions& o);

struct GradcheckGroup {
  std::string name;
  double max_rel_err = 0.0;
  bool passed = true;
};

struct GradcheckResult {
  std::vector<GradcheckGroup> groups;  // memory, classifier, decoder
  std::size_t resampled = 0;
  bool passed = true;
  std::string report_json;
};

// Full four-term objective on seeded random instances, analytic gradients vs
// central differences. Draws too close to a non-smooth locus (threshold
// margin < 1e-6 or a rectifier pre-activation within 1e-4 of zero) are
// re-sampled and counted.
GradcheckResult run_gradcheck(const GradcheckOptions& options);

}  // namespace memspm
