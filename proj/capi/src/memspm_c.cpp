#include "memspm.h"

#include <cstring>
#include <new>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "memspm/engine.hpp"
#include "memspm/errors.hpp"

struct memspm_dataset_t {
  memspm::EmbeddingDataset ds;
};

struct memspm_engine_t {
  memspm::Model model;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class Fn>
memspm_status wrap(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MEMSPM_OK;
  } catch (const memspm::ContractViolation& e) {
    g_last_error = e.what();
    return MEMSPM_ERR_INVALID_ARGUMENT;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return MEMSPM_ERR_INVALID_ARGUMENT;
  } catch (const memspm::FormatError& e) {
    g_last_error = e.what();
    return MEMSPM_ERR_FORMAT;
  } catch (const memspm::IoError& e) {
    g_last_error = e.what();
    return MEMSPM_ERR_IO;
  } catch (const std::domain_error& e) {
    g_last_error = e.what();
    return MEMSPM_ERR_DOMAIN;
  } catch (const memspm::NumericError& e) {
    g_last_error = e.what();
    return MEMSPM_ERR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MEMSPM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MEMSPM_ERR_INTERNAL;
  }
}

memspm_status require(bool ok, const char* message) {
  if (ok) return MEMSPM_OK;
  g_last_error = message;
  return MEMSPM_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* memspm_version(void) { return "1.0.0"; }

const char* memspm_status_name(memspm_status status) {
  switch (status) {
    case MEMSPM_OK: return "ok";
    case MEMSPM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case MEMSPM_ERR_IO: return "io";
    case MEMSPM_ERR_FORMAT: return "format";
    case MEMSPM_ERR_DOMAIN: return "domain";
    case MEMSPM_ERR_NUMERIC: return "numeric";
    default: return "internal";
  }
}

const char* memspm_last_error(void) { return g_last_error.c_str(); }

void memspm_string_free(char* s) { std::free(s); }

memspm_status memspm_generate(const char* spec_json, const char* source_path,
                              const char* target_path, char** stats_json_out) {
  if (auto st = require(source_path && target_path, "generate: null path"); st != MEMSPM_OK)
    return st;
  return wrap([&] {
    const memspm::SyntheticSpec spec =
        memspm::synthetic_spec_from_json(spec_json ? spec_json : "{}");
    memspm::SyntheticStats stats;
    auto [source, target] = memspm::generate_synthetic(spec, &stats);
    memspm::write_dataset(source, source_path);
    memspm::write_dataset(target, target_path);
    if (stats_json_out) {
      nlohmann::json j;
      j["resolved_spec"] = nlohmann::json::parse(memspm::synthetic_spec_to_json(spec));
      j["min_source_mean_dist"] = stats.min_source_mean_dist;
      j["min_target_mean_dist"] = stats.min_target_mean_dist;
      j["has_substructure"] = stats.has_substructure;
      if (!stats.has_substructure) j["note"] = "no sub-structure (single sub-cluster per class)";
      j["n_source"] = source.size();
      j["n_target"] = target.size();
      *stats_json_out = dup_string(j.dump(2));
    }
  });
}

memspm_status memspm_dataset_open(const char* path, memspm_dataset_t** out) {
  if (auto st = require(path && out, "dataset_open: null argument"); st != MEMSPM_OK) return st;
  return wrap([&] { *out = new memspm_dataset_t{memspm::read_dataset(path)}; });
}

memspm_status memspm_dataset_import_csv(const char* path, int domain, memspm_dataset_t** out) {
  if (auto st = require(path && out && (domain == 0 || domain == 1),
                        "dataset_import_csv: bad argument");
      st != MEMSPM_OK)
    return st;
  return wrap([&] {
    *out = new memspm_dataset_t{
        memspm::import_csv(path, static_cast<memspm::Domain>(domain))};
  });
}

memspm_status memspm_dataset_save(const memspm_dataset_t* ds, const char* path) {
  if (auto st = require(ds && path, "dataset_save: null argument"); st != MEMSPM_OK) return st;
  return wrap([&] { memspm::write_dataset(ds->ds, path); });
}

memspm_status memspm_dataset_hide_labels(const memspm_dataset_t* ds, memspm_dataset_t** out) {
  if (auto st = require(ds && out, "dataset_hide_labels: null argument"); st != MEMSPM_OK)
    return st;
  return wrap([&] { *out = new memspm_dataset_t{memspm::hide_labels(ds->ds)}; });
}

memspm_status memspm_dataset_apply_split(const memspm_dataset_t* ds, const char* scenario,
                                         const char* dataset_name, int role,
                                         memspm_dataset_t** out) {
  if (auto st = require(ds && scenario && dataset_name && out && (role == 0 || role == 1),
                        "dataset_apply_split: bad argument");
      st != MEMSPM_OK)
    return st;
  return wrap([&] {
    const memspm::LabelSplit split =
        memspm::make_split(memspm::scenario_from_string(scenario), dataset_name);
    *out = new memspm_dataset_t{
        memspm::apply_split(ds->ds, split, static_cast<memspm::Domain>(role))};
  });
}

void memspm_dataset_close(memspm_dataset_t* ds) { delete ds; }

int64_t memspm_dataset_count(const memspm_dataset_t* ds) {
  return ds ? static_cast<int64_t>(ds->ds.size()) : -1;
}

int64_t memspm_dataset_dim(const memspm_dataset_t* ds) {
  return ds ? static_cast<int64_t>(ds->ds.dim()) : -1;
}

int64_t memspm_dataset_num_classes(const memspm_dataset_t* ds) {
  return ds ? ds->ds.num_classes() : -1;
}

int memspm_dataset_domain(const memspm_dataset_t* ds) {
  return ds ? static_cast<int>(ds->ds.domain) : -1;
}

memspm_status memspm_engine_create(const char* config_json, memspm_engine_t** out) {
  if (auto st = require(config_json && out, "engine_create: null argument"); st != MEMSPM_OK)
    return st;
  return wrap([&] {
    *out = new memspm_engine_t{
        memspm::Model::init(memspm::model_config_from_json(config_json))};
  });
}

memspm_status memspm_engine_load(const char* checkpoint_path, memspm_engine_t** out) {
  if (auto st = require(checkpoint_path && out, "engine_load: null argument"); st != MEMSPM_OK)
    return st;
  return wrap([&] { *out = new memspm_engine_t{memspm::load_checkpoint(checkpoint_path)}; });
}

memspm_status memspm_engine_save(const memspm_engine_t* engine, const char* checkpoint_path) {
  if (auto st = require(engine && checkpoint_path, "engine_save: null argument");
      st != MEMSPM_OK)
    return st;
  return wrap([&] { memspm::save_checkpoint(engine->model, checkpoint_path); });
}

memspm_status memspm_engine_config(const memspm_engine_t* engine, char** json_out) {
  if (auto st = require(engine && json_out, "engine_config: null argument"); st != MEMSPM_OK)
    return st;
  return wrap([&] { *json_out = dup_string(memspm::model_config_to_json(engine->model.cfg)); });
}

void memspm_engine_close(memspm_engine_t* engine) { delete engine; }

memspm_status memspm_train(memspm_engine_t* engine, const memspm_dataset_t* source,
                           const memspm_dataset_t* target, const char* train_json,
                           const char* history_csv_path) {
  if (auto st = require(engine && source && target, "train: null argument"); st != MEMSPM_OK)
    return st;
  return wrap([&] {
    const memspm::TrainConfig cfg =
        memspm::train_config_from_json(train_json ? train_json : "{}");
    const memspm::TrainHistory history =
        memspm::train(engine->model, source->ds, target->ds, cfg);
    if (history_csv_path) history.write_csv(history_csv_path);
  });
}

memspm_status memspm_evaluate(const memspm_engine_t* engine, const memspm_dataset_t* source,
                              const memspm_dataset_t* target, const char* eval_json,
                              char** metrics_json_out) {
  if (auto st = require(engine && source && target, "evaluate: null argument"); st != MEMSPM_OK)
    return st;
  return wrap([&] {
    memspm::EvalOptions options;
    if (eval_json) {
      const nlohmann::json j = nlohmann::json::parse(eval_json, nullptr, false);
      if (j.is_discarded()) throw memspm::ContractViolation("evaluate: invalid JSON options");
      if (j.contains("k_target")) options.k_target = j.at("k_target").get<std::size_t>();
      if (j.contains("seed")) options.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("scenario") && j.contains("dataset_name")) {
        options.split = memspm::make_split(
            memspm::scenario_from_string(j.at("scenario").get<std::string>()),
            j.at("dataset_name").get<std::string>());
      }
    }
    const memspm::EvalResult result =
        memspm::evaluate(engine->model, source->ds, target->ds, options);
    if (metrics_json_out) *metrics_json_out = dup_string(result.to_json());
  });
}

memspm_status memspm_inspect(const memspm_engine_t* engine, const memspm_dataset_t* data,
                             const char* out_dir, char** report_json_out) {
  if (auto st = require(engine && data && out_dir, "inspect: null argument"); st != MEMSPM_OK)
    return st;
  return wrap([&] {
    const memspm::InspectResult result = memspm::inspect(engine->model, data->ds, out_dir);
    if (report_json_out) *report_json_out = dup_string(result.report_json);
  });
}

memspm_status memspm_gradcheck(const char* config_json, char** report_json_out) {
  return wrap([&] {
    const memspm::GradcheckOptions options =
        memspm::gradcheck_options_from_json(config_json ? config_json : "{}");
    const memspm::GradcheckResult result = memspm::run_gradcheck(options);
    if (report_json_out) *report_json_out = dup_string(result.report_json);
  });
}

memspm_status memspm_engine_address(const memspm_engine_t* engine, const double* query,
                                    int64_t dim, char** result_json_out) {
  if (auto st = require(engine && query && dim > 0 && result_json_out,
                        "engine_address: bad argument");
      st != MEMSPM_OK)
    return st;
  return wrap([&] {
    const memspm::MemoryBank bank = engine->model.bank();
    const memspm::AddressingResult res =
        memspm::address({query, static_cast<std::size_t>(dim)}, bank);
    nlohmann::json j;
    j["lambda"] = res.lambda;
    j["fallback"] = res.fallback;
    for (std::size_t i : res.kept_items) {
      nlohmann::json cell;
      cell["item"] = i;
      cell["sub"] = res.argmax_idx[i];
      cell["weight"] = res.kept_weights[i];
      j["kept"].push_back(cell);
    }
    auto [di, dj] = res.dominant_cell();
    j["dominant"]["item"] = di;
    j["dominant"]["sub"] = dj;
    *result_json_out = dup_string(j.dump(2));
  });
}

}  // extern "C"
