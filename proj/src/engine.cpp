#include "memspm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "memspm/errors.hpp"
#include "memspm/pca.hpp"
#include "memspm/rng.hpp"

namespace memspm {

using nlohmann::json;

namespace {

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ContractViolation(std::string(what) + ": invalid JSON: " + e.what());
  }
}

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ContractViolation(std::string("config field '") + key + "' has the wrong type");
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ModelConfig model_config_from_json(const std::string& json_text) {
  const json j = parse(json_text, "model config");
  ModelConfig cfg;
  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    const std::string kind = field<std::string>(e, "kind", "precomputed");
    if (kind == "precomputed") {
      cfg.encoder.kind = EncoderKind::precomputed;
    } else if (kind == "random_projection") {
      cfg.encoder.kind = EncoderKind::random_projection;
    } else {
      throw ContractViolation("model config: unknown encoder kind " + kind);
    }
    cfg.encoder.in_dim = field<std::size_t>(e, "in_dim", 0);
    cfg.encoder.out_dim = field<std::size_t>(e, "out_dim", cfg.encoder.in_dim);
    cfg.encoder.seed = field<std::uint64_t>(e, "seed", 0);
  }
  if (j.contains("memory")) {
    const json& m = j.at("memory");
    cfg.memory.enabled = field<bool>(m, "enabled", true);
    cfg.memory.n_items = field<std::size_t>(m, "n_items", cfg.memory.n_items);
    cfg.memory.n_subs = field<std::size_t>(m, "n_subs", cfg.memory.n_subs);
    cfg.memory.top_k = field<std::size_t>(m, "top_k", cfg.memory.top_k);
    cfg.memory.epsilon = field<double>(m, "epsilon", cfg.memory.epsilon);
  }
  cfg.hidden = field<std::size_t>(j, "hidden", cfg.hidden);
  cfg.n_classes = field<std::size_t>(j, "n_classes", cfg.n_classes);
  cfg.init_seed = field<std::uint64_t>(j, "init_seed", cfg.init_seed);
  return cfg;
}

std::string model_config_to_json(const ModelConfig& cfg) {
  json j;
  j["encoder"]["kind"] =
      cfg.encoder.kind == EncoderKind::precomputed ? "precomputed" : "random_projection";
  j["encoder"]["in_dim"] = cfg.encoder.in_dim;
  j["encoder"]["out_dim"] = cfg.encoder.out_dim;
  j["encoder"]["seed"] = cfg.encoder.seed;
  j["memory"]["enabled"] = cfg.memory.enabled;
  j["memory"]["n_items"] = cfg.memory.n_items;
  j["memory"]["n_subs"] = cfg.memory.n_subs;
  j["memory"]["top_k"] = cfg.memory.top_k;
  j["memory"]["epsilon"] = cfg.memory.epsilon;
  j["hidden"] = cfg.hidden;
  j["n_classes"] = cfg.n_classes;
  j["init_seed"] = cfg.init_seed;
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& json_text) {
  const json j = parse(json_text, "train config");
  TrainConfig cfg;
  cfg.epochs = field<std::size_t>(j, "epochs", cfg.epochs);
  cfg.batch_size = field<std::size_t>(j, "batch_size", cfg.batch_size);
  cfg.refresh_every = field<std::size_t>(j, "refresh_every", cfg.refresh_every);
  cfg.k_target = field<std::size_t>(j, "k_target", cfg.k_target);
  cfg.seed = field<std::uint64_t>(j, "seed", cfg.seed);
  if (j.contains("sgd")) {
    const json& s = j.at("sgd");
    cfg.sgd.lr0 = field<double>(s, "lr0", cfg.sgd.lr0);
    cfg.sgd.momentum = field<double>(s, "momentum", cfg.sgd.momentum);
    cfg.sgd.weight_decay = field<double>(s, "weight_decay", cfg.sgd.weight_decay);
    cfg.sgd.alpha = field<double>(s, "alpha", cfg.sgd.alpha);
    cfg.sgd.beta = field<double>(s, "beta", cfg.sgd.beta);
  }
  if (j.contains("loss_weights")) {
    const json& w = j.at("loss_weights");
    cfg.loss_weights.lambda1 = field<double>(w, "lambda1", cfg.loss_weights.lambda1);
    cfg.loss_weights.lambda2 = field<double>(w, "lambda2", cfg.loss_weights.lambda2);
    cfg.loss_weights.lambda3 = field<double>(w, "lambda3", cfg.loss_weights.lambda3);
  }
  if (cfg.loss_weights.lambda1 < 0 || cfg.loss_weights.lambda2 < 0 ||
      cfg.loss_weights.lambda3 < 0)
    throw ContractViolation("train config: loss weights must be nonnegative");
  return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["refresh_every"] = cfg.refresh_every;
  j["k_target"] = cfg.k_target;
  j["seed"] = cfg.seed;
  j["sgd"]["lr0"] = cfg.sgd.lr0;
  j["sgd"]["momentum"] = cfg.sgd.momentum;
  j["sgd"]["weight_decay"] = cfg.sgd.weight_decay;
  j["sgd"]["alpha"] = cfg.sgd.alpha;
  j["sgd"]["beta"] = cfg.sgd.beta;
  j["loss_weights"]["lambda1"] = cfg.loss_weights.lambda1;
  j["loss_weights"]["lambda2"] = cfg.loss_weights.lambda2;
  j["loss_weights"]["lambda3"] = cfg.loss_weights.lambda3;
  return j.dump(2);
}

SyntheticSpec synthetic_spec_from_json(const std::string& json_text) {
  const json j = parse(json_text, "synthetic spec");
  SyntheticSpec spec;
  spec.n_common = field<std::size_t>(j, "n_common", spec.n_common);
  spec.n_src_private = field<std::size_t>(j, "n_src_private", spec.n_src_private);
  spec.n_tgt_private = field<std::size_t>(j, "n_tgt_private", spec.n_tgt_private);
  spec.subclusters_per_class = field<std::size_t>(j, "subclusters_per_class",
                                                  spec.subclusters_per_class);
  spec.dim = field<std::size_t>(j, "dim", spec.dim);
  spec.samples_per_subcluster = field<std::size_t>(j, "samples_per_subcluster",
                                                   spec.samples_per_subcluster);
  spec.shift_scale = field<double>(j, "shift_scale", spec.shift_scale);
  spec.noise_sigma = field<double>(j, "noise_sigma", spec.noise_sigma);
  spec.separation = field<double>(j, "separation", spec.separation);
  spec.seed = field<std::uint64_t>(j, "seed", spec.seed);
  spec.validate();
  return spec;
}

std::string synthetic_spec_to_json(const SyntheticSpec& spec) {
  json j;
  j["n_common"] = spec.n_common;
  j["n_src_private"] = spec.n_src_private;
  j["n_tgt_private"] = spec.n_tgt_private;
  j["subclusters_per_class"] = spec.subclusters_per_class;
  j["dim"] = spec.dim;
  j["samples_per_subcluster"] = spec.samples_per_subcluster;
  j["shift_scale"] = spec.shift_scale;
  j["noise_sigma"] = spec.noise_sigma;
  j["separation"] = spec.separation;
  j["seed"] = spec.seed;
  return j.dump(2);
}

namespace {

constexpr char kCkptMagic[4] = {'M', 'S', 'P', 'C'};
constexpr std::uint32_t kCkptVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t take_u32(std::ifstream& in, std::size_t& offset) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw FormatError("checkpoint: truncated", offset);
  offset += 4;
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t take_u64(std::ifstream& in, std::size_t& offset) {
  const std::uint64_t lo = take_u32(in, offset);
  const std::uint64_t hi = take_u32(in, offset);
  return lo | (hi << 32);
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_checkpoint: cannot open " + path);
  out.write(kCkptMagic, 4);
  put_u32(out, kCkptVersion);
  put_u64(out, model.iteration);
  const std::string cfg = model_config_to_json(model.cfg);
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

  const std::vector<std::string> names = model.params.names();
  put_u32(out, static_cast<std::uint32_t>(names.size()));
  for (const std::string& name : names) {
    const RealMatrix& p = model.params.param(name);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(p.rows()));
    put_u32(out, static_cast<std::uint32_t>(p.cols()));
    out.write(reinterpret_cast<const char*>(p.data()),
              static_cast<std::streamsize>(p.size() * sizeof(double)));
  }
  if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path);
  std::size_t offset = 0;

  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kCkptMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic", 0);
  offset += 4;
  if (take_u32(in, offset) != kCkptVersion)
    throw FormatError("checkpoint: unsupported version", 4);
  const std::uint64_t iteration = take_u64(in, offset);

  const std::uint32_t cfg_len = take_u32(in, offset);
  std::string cfg_text(cfg_len, '\0');
  in.read(cfg_text.data(), cfg_len);
  if (in.gcount() != static_cast<std::streamsize>(cfg_len))
    throw FormatError("checkpoint: truncated config", offset);
  offset += cfg_len;

  const ModelConfig cfg = model_config_from_json(cfg_text);
  Model model;
  model.cfg = cfg;
  model.projection = make_projection(cfg.encoder);
  model.iteration = iteration;

  const std::uint32_t n_params = take_u32(in, offset);
  for (std::uint32_t p = 0; p < n_params; ++p) {
    const std::uint32_t name_len = take_u32(in, offset);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (in.gcount() != static_cast<std::streamsize>(name_len))
      throw FormatError("checkpoint: truncated parameter name", offset);
    offset += name_len;
    const std::uint32_t rows = take_u32(in, offset);
    const std::uint32_t cols = take_u32(in, offset);
    RealMatrix& m = model.params.create(name, rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(m.size() * sizeof(double)))
      throw FormatError("checkpoint: truncated parameter data", offset);
    offset += m.size() * sizeof(double);
  }
  return model;
}

std::string EvalResult::to_json() const {
  json j;
  j["os_star"] = metrics.os_star;
  j["overall_accuracy"] = metrics.overall_accuracy;
  j["n_consensus_clusters"] = n_consensus;
  for (const auto& [c, acc] : metrics.per_class) j["per_class"][std::to_string(c)] = acc;
  if (metrics.pda) {
    j["pda_accuracy"] = metrics.pda_accuracy;
  } else {
    j["unk"] = metrics.unk;
    j["h_score"] = metrics.h_score;
  }
  if (!metrics.missing_common.empty()) j["missing_common_classes"] = metrics.missing_common;
  return j.dump(2);
}

EvalResult evaluate(const Model& model, const EmbeddingDataset& source,
                    const EmbeddingDataset& target, const EvalOptions& options) {
  const std::vector<std::int32_t>& gt = target.ground_truth();
  bool any_label = false;
  for (std::int32_t l : gt) any_label = any_label || l >= 0;
  if (!any_label) throw ContractViolation("evaluate: target ground truth unavailable");

  const std::size_t k_target =
      options.k_target > 0 ? options.k_target : model.cfg.n_classes + 4;
  PseudoRefresh refresh =
      refresh_pseudo_labels(model, source, target, k_target, options.seed);

  EvalResult result;
  result.n_consensus = refresh.pseudo.consensus.size();
  result.predictions.resize(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const std::vector<double> logits = classify(model, refresh.tgt_zhat.row(i));
    result.predictions[i] = predict_unknown_aware(logits, !refresh.pseudo.unknown_mask[i]);
  }

  LabelSplit split;
  if (options.split) {
    split = *options.split;
  } else {
    // derive from the ground truth: ids the classifier can name are common,
    // the rest are target-private
    std::set<std::int32_t> present(gt.begin(), gt.end());
    for (std::int32_t c : present) {
      if (c < 0) continue;
      if (static_cast<std::size_t>(c) < model.cfg.n_classes)
        split.common.push_back(c);
      else
        split.target_private.push_back(c);
    }
  }
  result.metrics = compute_metrics(result.predictions, gt, split);
  return result;
}

namespace {

struct CsvWriter {
  std::ofstream out;
  explicit CsvWriter(const std::string& path) : out(path, std::ios::trunc) {
    if (!out) throw IoError("inspect: cannot open " + path);
  }
  void line(const std::string& s) { out << s << '\n'; }
};

std::string effective_label_str(std::int32_t label) { return std::to_string(label); }

}  // namespace

InspectResult inspect(const Model& model, const EmbeddingDataset& data,
                      const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

  InspectResult result;
  result.n_samples = data.size();
  json report;
  report["n_samples"] = data.size();
  report["memory_enabled"] = model.cfg.memory.enabled;

  // effective labels: public where present, else hidden ground truth
  std::vector<std::int32_t> labels(data.size(), kUnlabeled);
  for (std::size_t i = 0; i < data.size(); ++i) {
    labels[i] = data.labels[i] >= 0 ? data.labels[i]
                : data.has_hidden_labels() ? data.hidden_labels[i]
                                           : kUnlabeled;
  }

  RealMatrix zhat(data.size(), model.embed_dim());
  std::vector<std::pair<std::size_t, std::size_t>> dominant(data.size(), {0, 0});
  std::vector<std::size_t> usage;
  if (model.cfg.memory.enabled) {
    MemoryBank bank = model.bank();
    usage.assign(bank.n_items * bank.n_subs, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      AddressingResult addr = address(encode(data.vectors.row(i), model.cfg.encoder,
                                             model.projection),
                                      bank);
      std::vector<double> z = retrieve(addr, bank);
      std::copy(z.begin(), z.end(), zhat.row(i).begin());
      dominant[i] = addr.dominant_cell();
      usage[bank.flat(dominant[i].first, dominant[i].second)] += 1;
    }
  } else {
    zhat = batch_zhat(model, data);
  }

  // task-embedding projection
  const Pca2 pca = pca2_fit(zhat);
  {
    const RealMatrix proj = pca2_project(pca, zhat);
    CsvWriter w(path("pca_zhat.csv"));
    w.line("index,label,p0,p1");
    char buf[128];
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%d,%.17g,%.17g", i, labels[i], proj(i, 0), proj(i, 1));
      w.line(buf);
    }
  }

  if (!model.cfg.memory.enabled) {
    report["note"] = "memory disabled; no sub-prototype statistics";
    result.report_json = report.dump(2);
    std::ofstream rep(path("report.json"), std::ios::trunc);
    rep << result.report_json << '\n';
    return result;
  }

  const MemoryBank bank = model.bank();
  const std::size_t n_cells = bank.n_items * bank.n_subs;

  // per-cell stats from dominant assignments
  std::vector<double> label_sum(n_cells, 0.0);
  std::vector<std::size_t> label_count(n_cells, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (labels[i] < 0) continue;
    const std::size_t f = bank.flat(dominant[i].first, dominant[i].second);
    label_sum[f] += labels[i];
    label_count[f] += 1;
  }

  {
    CsvWriter w(path("usage.csv"));
    w.line("item,sub,usage_count,mean_assigned_label");
    char buf[160];
    for (std::size_t f = 0; f < n_cells; ++f) {
      if (usage[f] == 0) continue;
      const double mean_label =
          label_count[f] > 0 ? label_sum[f] / static_cast<double>(label_count[f])
                             : std::numeric_limits<double>::quiet_NaN();
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%.17g", f / bank.n_subs, f % bank.n_subs,
                    usage[f], mean_label);
      w.line(buf);
    }
  }

  {
    CsvWriter w(path("assignments.csv"));
    w.line("index,label,subcluster,item,sub");
    char buf[160];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::int32_t sub_id = data.has_subclusters() ? data.subcluster_ids[i] : -1;
      std::snprintf(buf, sizeof(buf), "%zu,%s,%d,%zu,%zu", i,
                    effective_label_str(labels[i]).c_str(), sub_id, dominant[i].first,
                    dominant[i].second);
      w.line(buf);
    }
  }

  std::size_t used_cells = 0;
  for (std::size_t f = 0; f < n_cells; ++f) used_cells += usage[f] > 0 ? 1 : 0;
  result.n_used_cells = used_cells;
  report["n_used_cells"] = used_cells;

  {
    // used rows in the zhat projection basis
    RealMatrix rows(used_cells, bank.dim);
    std::vector<std::size_t> flat_ids(used_cells);
    std::size_t r = 0;
    for (std::size_t f = 0; f < n_cells; ++f) {
      if (usage[f] == 0) continue;
      auto src = bank.items->row(f);
      std::copy(src.begin(), src.end(), rows.row(r).begin());
      flat_ids[r++] = f;
    }
    CsvWriter w(path("pca_memory.csv"));
    w.line("item,sub,usage_count,p0,p1");
    if (used_cells > 0) {
      const RealMatrix proj = pca2_project(pca, rows);
      char buf[160];
      for (std::size_t i = 0; i < used_cells; ++i) {
        const std::size_t f = flat_ids[i];
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%.17g,%.17g", f / bank.n_subs,
                      f % bank.n_subs, usage[f], proj(i, 0), proj(i, 1));
        w.line(buf);
      }
    }
  }

  {
    // decoded top-used rows, usage-descending (flat index on ties), capped
    std::vector<std::size_t> order;
    for (std::size_t f = 0; f < n_cells; ++f) {
      if (usage[f] > 0) order.push_back(f);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return usage[a] > usage[b]; });
    if (order.size() > 64) order.resize(64);
    CsvWriter w(path("decoded.csv"));
    std::string header = "item,sub,usage_count";
    for (std::size_t d = 0; d < model.cfg.encoder.in_dim; ++d)
      header += ",x" + std::to_string(d);
    w.line(header);
    for (std::size_t f : order) {
      const std::vector<double> decoded = decode(model, bank.items->row(f));
      std::string line = std::to_string(f / bank.n_subs) + "," + std::to_string(f % bank.n_subs) +
                         "," + std::to_string(usage[f]);
      for (double v : decoded) line += "," + fmt_double(v);
      w.line(line);
    }
  }

  // within-class agreement between dominant cells and planted sub-clusters
  if (data.has_subclusters()) {
    std::map<std::int32_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (labels[i] >= 0) by_class[labels[i]].push_back(i);
    }
    double ari_sum = 0.0;
    std::size_t ari_n = 0;
    for (const auto& [c, rows] : by_class) {
      std::vector<std::int32_t> planted, mined;
      for (std::size_t i : rows) {
        planted.push_back(data.subcluster_ids[i]);
        mined.push_back(static_cast<std::int32_t>(
            bank.flat(dominant[i].first, dominant[i].second)));
      }
      const std::optional<double> ari = adjusted_rand_index(planted, mined);
      if (ari) {
        result.ari_per_class[c] = *ari;
        report["ari_per_class"][std::to_string(c)] = *ari;
        ari_sum += *ari;
        ari_n += 1;
      }
    }
    if (ari_n > 0) {
      result.ari_mean = ari_sum / static_cast<double>(ari_n);
      report["ari_mean"] = *result.ari_mean;
    } else {
      report["ari_mean"] = nullptr;
      report["ari_note"] = "undefined: no class has a non-degenerate planted partition";
    }

    // do decoded frequently-used cells land nearest the sub-cluster that
    // actually uses them?
    std::map<std::int32_t, std::pair<std::vector<double>, std::size_t>> sub_means;
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto& [sum, count] = sub_means[data.subcluster_ids[i]];
      if (sum.empty()) sum.assign(data.dim(), 0.0);
      auto r = data.vectors.row(i);
      for (std::size_t k = 0; k < data.dim(); ++k) sum[k] += r[k];
      count += 1;
    }
    for (auto& [id, entry] : sub_means) {
      for (double& v : entry.first) v /= static_cast<double>(entry.second);
    }

    std::map<std::size_t, std::map<std::int32_t, std::size_t>> cell_users;
    for (std::size_t i = 0; i < data.size(); ++i) {
      cell_users[bank.flat(dominant[i].first, dominant[i].second)][data.subcluster_ids[i]] += 1;
    }
    const std::size_t floor = std::max<std::size_t>(5, data.size() / 200);
    std::size_t freq = 0, matched = 0;
    for (const auto& [f, users] : cell_users) {
      if (usage[f] < floor) continue;
      ++freq;
      std::int32_t majority = users.begin()->first;
      std::size_t majority_n = 0;
      for (const auto& [sub_id, n] : users) {
        if (n > majority_n) {
          majority_n = n;
          majority = sub_id;
        }
      }
      const std::vector<double> decoded = decode(model, bank.items->row(f));
      std::int32_t nearest = majority;
      double nearest_d = std::numeric_limits<double>::infinity();
      for (const auto& [sub_id, entry] : sub_means) {
        const double d = squared_distance(decoded, entry.first);
        if (d < nearest_d) {
          nearest_d = d;
          nearest = sub_id;
        }
      }
      matched += nearest == majority ? 1 : 0;
    }
    if (freq > 0) {
      result.decode_match_frac = static_cast<double>(matched) / static_cast<double>(freq);
      report["decode_match_frac"] = *result.decode_match_frac;
      report["n_frequent_cells"] = freq;
    }
  } else {
    report["ari_mean"] = nullptr;
    report["ari_note"] = "undefined: dataset has no planted sub-cluster ids";
  }

  result.report_json = report.dump(2);
  std::ofstream rep(path("report.json"), std::ios::trunc);
  if (!rep) throw IoError("inspect: cannot open " + path("report.json"));
  rep << result.report_json << '\n';
  return result;
}

GradcheckOptions gradcheck_options_from_json(const std::string& json_text) {
  const json j = parse(json_text, "gradcheck config");
  GradcheckOptions o;
  o.n_items = field<std::size_t>(j, "n_items", o.n_items);
  o.n_subs = field<std::size_t>(j, "n_subs", o.n_subs);
  o.top_k = field<std::size_t>(j, "top_k", o.top_k);
  o.dim = field<std::size_t>(j, "dim", o.dim);
  o.in_dim = field<std::size_t>(j, "in_dim", o.in_dim);
  o.hidden = field<std::size_t>(j, "hidden", o.hidden);
  o.n_classes = field<std::size_t>(j, "n_classes", o.n_classes);
  o.batch = field<std::size_t>(j, "batch", o.batch);
  o.draws = field<std::size_t>(j, "draws", o.draws);
  o.step = field<double>(j, "step", o.step);
  o.tol = field<double>(j, "tol", o.tol);
  o.seed = field<std::uint64_t>(j, "seed", o.seed);
  return o;
}

std::string gradcheck_options_to_json(const GradcheckOptions& o) {
  json j;
  j["n_items"] = o.n_items;
  j["n_subs"] = o.n_subs;
  j["top_k"] = o.top_k;
  j["dim"] = o.dim;
  j["in_dim"] = o.in_dim;
  j["hidden"] = o.hidden;
  j["n_classes"] = o.n_classes;
  j["batch"] = o.batch;
  j["draws"] = o.draws;
  j["step"] = o.step;
  j["tol"] = o.tol;
  j["seed"] = o.seed;
  return j.dump(2);
}

GradcheckResult run_gradcheck(const GradcheckOptions& options) {
  constexpr double kThresholdMargin = 1e-6;
  constexpr double kReluMargin = 1e-4;

  GradcheckResult result;
  std::map<std::string, double> group_err = {
      {"memory", 0.0}, {"classifier", 0.0}, {"decoder", 0.0}};

  std::size_t accepted = 0;
  std::uint64_t attempt = 0;
  while (accepted < options.draws) {
    if (attempt > options.draws * 50 + 100)
      throw NumericError("gradcheck: could not sample enough well-separated draws");
    const std::uint64_t draw_seed = Rng::derive(options.seed, attempt++);
    Rng rng(draw_seed);

    ModelConfig cfg;
    cfg.encoder.kind = EncoderKind::random_projection;
    cfg.encoder.in_dim = options.in_dim;
    cfg.encoder.out_dim = options.dim;
    cfg.encoder.seed = rng.next_u64();
    cfg.memory.n_items = options.n_items;
    cfg.memory.n_subs = options.n_subs;
    cfg.memory.top_k = options.top_k;
    cfg.hidden = options.hidden;
    cfg.n_classes = options.n_classes;
    cfg.init_seed = rng.next_u64();
    Model model = Model::init(cfg);

    RealMatrix src_x(options.batch, options.in_dim), tgt_x(options.batch, options.in_dim);
    for (std::size_t i = 0; i < src_x.size(); ++i) src_x.data()[i] = rng.normal();
    for (std::size_t i = 0; i < tgt_x.size(); ++i) tgt_x.data()[i] = rng.normal();
    std::vector<std::int32_t> src_labels(options.batch), tgt_pseudo(options.batch);
    for (std::size_t i = 0; i < options.batch; ++i)
      src_labels[i] = static_cast<std::int32_t>(rng.below(options.n_classes));
    // pseudo labels overlap the source labels; roughly a quarter unknown
    for (std::size_t i = 0; i < options.batch; ++i) {
      tgt_pseudo[i] = (i % 4 == 3) ? kUnknownLabel : src_labels[i % options.batch];
    }
    std::vector<std::int32_t> consensus(src_labels);
    std::sort(consensus.begin(), consensus.end());
    consensus.erase(std::unique(consensus.begin(), consensus.end()), consensus.end());

    LossWeights weights;  // all four terms active at their defaults

    // margin probe; re-sample draws near a non-smooth locus
    BatchLossStats probe =
        batch_loss(model, src_x, src_labels, tgt_x, tgt_pseudo, consensus, weights, false);
    if (probe.min_threshold_margin < kThresholdMargin || probe.min_relu_margin < kReluMargin ||
        probe.fallbacks > 0) {
      ++result.resampled;
      continue;
    }

    model.params.zero_grads();
    batch_loss(model, src_x, src_labels, tgt_x, tgt_pseudo, consensus, weights, true);

    auto loss_only = [&](ParamStore&) -> double {
      return batch_loss(model, src_x, src_labels, tgt_x, tgt_pseudo, consensus, weights, false)
          .total;
    };
    const GradCheckReport report =
        finite_diff_check(loss_only, model.params, options.step, options.tol);
    for (const auto& [name, err] : report.per_param_max) {
      std::string group = "classifier";
      if (name.rfind("mem.", 0) == 0) group = "memory";
      else if (name.rfind("dec.", 0) == 0) group = "decoder";
      group_err[group] = std::max(group_err[group], err);
    }
    accepted += 1;
  }

  json j;
  result.passed = true;
  for (const auto& [name, err] : group_err) {
    GradcheckGroup g;
    g.name = name;
    g.max_rel_err = err;
    g.passed = err <= options.tol;
    result.passed = result.passed && g.passed;
    result.groups.push_back(g);
    j["groups"][name]["max_rel_err"] = err;
    j["groups"][name]["passed"] = g.passed;
  }
  j["draws"] = options.draws;
  j["resampled"] = result.resampled;
  j["tol"] = options.tol;
  j["step"] = options.step;
  j["passed"] = result.passed;
  result.report_json = j.dump(2);
  return result;
}

}  // namespace memspm
