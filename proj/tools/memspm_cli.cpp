// Command-line front end over the memspm C API. Every run writes its fully
// resolved configuration next to its outputs so it can be reproduced with
// `--config <that file>` alone.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "memspm.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, memspm_status st) {
  std::cerr << where << " failed: " << memspm_status_name(st) << ": " << memspm_last_error()
            << "\n";
  std::exit(1);
}

void check(const std::string& where, memspm_status st) {
  if (st != MEMSPM_OK) fail(where, st);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open config " << path << "\n";
    std::exit(1);
  }
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    std::cerr << "invalid JSON in " << path << "\n";
    std::exit(1);
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    std::cerr << "cannot write " << path << "\n";
    std::exit(1);
  }
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string owned(char* s) {
  std::string out = s ? s : "";
  memspm_string_free(s);
  return out;
}

template <class T>
void override_field(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

struct DatasetHandle {
  memspm_dataset_t* ptr = nullptr;
  ~DatasetHandle() { memspm_dataset_close(ptr); }
};

struct EngineHandle {
  memspm_engine_t* ptr = nullptr;
  ~EngineHandle() { memspm_engine_close(ptr); }
};

// ---- gen ----------------------------------------------------------------

struct GenArgs {
  std::optional<std::string> config, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> dim, n_common, n_src_private, n_tgt_private, subclusters, samples;
  std::optional<double> shift, noise, separation;
};

int run_gen(const GenArgs& a) {
  json resolved;
  if (a.config) resolved = load_json_file(*a.config);
  json& spec = resolved["spec"];
  if (!spec.is_object()) spec = json::object();
  override_field(spec, "seed", a.seed);
  override_field(spec, "dim", a.dim);
  override_field(spec, "n_common", a.n_common);
  override_field(spec, "n_src_private", a.n_src_private);
  override_field(spec, "n_tgt_private", a.n_tgt_private);
  override_field(spec, "subclusters_per_class", a.subclusters);
  override_field(spec, "samples_per_subcluster", a.samples);
  override_field(spec, "shift_scale", a.shift);
  override_field(spec, "noise_sigma", a.noise);
  override_field(spec, "separation", a.separation);

  std::string out_dir = a.out ? *a.out : resolved.value("paths", json::object()).value("out", "");
  if (out_dir.empty()) {
    std::cerr << "gen: --out is required\n";
    return 1;
  }
  fs::create_directories(out_dir);
  const std::string source_path = (fs::path(out_dir) / "source.mspm").string();
  const std::string target_path = (fs::path(out_dir) / "target.mspm").string();

  char* stats_raw = nullptr;
  check("generate", memspm_generate(spec.dump().c_str(), source_path.c_str(),
                                    target_path.c_str(), &stats_raw));
  const json stats = json::parse(owned(stats_raw));

  resolved["command"] = "gen";
  resolved["paths"] = {{"out", out_dir}, {"source", source_path}, {"target", target_path}};
  resolved["spec"] = stats.at("resolved_spec");
  resolved["stats"] = {{"min_source_mean_dist", stats.at("min_source_mean_dist")},
                       {"min_target_mean_dist", stats.at("min_target_mean_dist")},
                       {"has_substructure", stats.at("has_substructure")},
                       {"n_source", stats.at("n_source")},
                       {"n_target", stats.at("n_target")}};
  if (stats.contains("note")) resolved["stats"]["note"] = stats.at("note");
  write_text((fs::path(out_dir) / "gen_config.json").string(), resolved.dump(2));

  std::cout << "wrote " << source_path << " (" << stats.at("n_source") << " rows), "
            << target_path << " (" << stats.at("n_target") << " rows)\n"
            << "min sub-cluster mean distance: source "
            << stats.at("min_source_mean_dist").get<double>() << ", target "
            << stats.at("min_target_mean_dist").get<double>() << "\n";
  return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::optional<std::string> config, source, target, out;
  std::optional<std::uint64_t> seed, encoder_seed, init_seed;
  std::optional<std::size_t> epochs, batch_size, refresh_every, k_target;
  std::optional<std::size_t> n_items, n_subs, top_k, hidden, embed_dim;
  std::optional<double> lr, momentum, weight_decay, lr_alpha, lr_beta;
  std::optional<double> lambda1, lambda2, lambda3, epsilon;
  std::optional<std::string> encoder, scenario, dataset_name;
  bool no_memory = false;
};

int run_train(const TrainArgs& a) {
  json resolved;
  if (a.config) resolved = load_json_file(*a.config);
  json& paths = resolved["paths"];
  if (!paths.is_object()) paths = json::object();
  if (a.source) paths["source"] = *a.source;
  if (a.target) paths["target"] = *a.target;
  if (a.out) paths["out"] = *a.out;
  if (!paths.contains("source") || !paths.contains("target") || !paths.contains("out")) {
    std::cerr << "train: --source, --target and --out are required\n";
    return 1;
  }
  const std::string out_dir = paths.at("out");
  fs::create_directories(out_dir);

  DatasetHandle source, target;
  check("open source", memspm_dataset_open(paths.at("source").get<std::string>().c_str(),
                                           &source.ptr));
  check("open target", memspm_dataset_open(paths.at("target").get<std::string>().c_str(),
                                           &target.ptr));

  json& split = resolved["split"];
  if (!split.is_object()) split = json::object();
  override_field(split, "scenario", a.scenario);
  override_field(split, "dataset_name", a.dataset_name);
  if (split.contains("scenario") != split.contains("dataset_name")) {
    std::cerr << "train: --scenario and --dataset-name must be given together\n";
    return 1;
  }

  DatasetHandle train_source, train_target;
  if (split.contains("scenario")) {
    check("apply split",
          memspm_dataset_apply_split(source.ptr, split.at("scenario").get<std::string>().c_str(),
                                     split.at("dataset_name").get<std::string>().c_str(), 0,
                                     &train_source.ptr));
    check("apply split",
          memspm_dataset_apply_split(target.ptr, split.at("scenario").get<std::string>().c_str(),
                                     split.at("dataset_name").get<std::string>().c_str(), 1,
                                     &train_target.ptr));
  } else {
    resolved.erase("split");
    check("hide labels", memspm_dataset_hide_labels(target.ptr, &train_target.ptr));
  }
  memspm_dataset_t* src = train_source.ptr ? train_source.ptr : source.ptr;
  memspm_dataset_t* tgt = train_target.ptr;

  const std::uint64_t seed = a.seed ? *a.seed
                             : resolved.contains("train") && resolved["train"].contains("seed")
                                 ? resolved["train"]["seed"].get<std::uint64_t>()
                                 : 1;
  const std::int64_t data_dim = memspm_dataset_dim(src);
  const std::int64_t n_classes = memspm_dataset_num_classes(src);

  json& model = resolved["model"];
  if (!model.is_object()) {
    model = json::object();
    model["encoder"] = {{"kind", "random_projection"},
                        {"in_dim", data_dim},
                        {"out_dim", data_dim},
                        {"seed", seed + 1000003}};
    model["memory"] = json::object();
  }
  model["n_classes"] = n_classes;
  model["encoder"]["in_dim"] = data_dim;
  if (!model["encoder"].contains("out_dim")) model["encoder"]["out_dim"] = data_dim;
  override_field(model["encoder"], "kind", a.encoder);
  override_field(model["encoder"], "out_dim", a.embed_dim);
  override_field(model["encoder"], "seed", a.encoder_seed);
  if (model["encoder"]["kind"] == "precomputed") model["encoder"]["out_dim"] = data_dim;
  override_field(model["memory"], "n_items", a.n_items);
  override_field(model["memory"], "n_subs", a.n_subs);
  override_field(model["memory"], "top_k", a.top_k);
  override_field(model["memory"], "epsilon", a.epsilon);
  if (a.no_memory) model["memory"]["enabled"] = false;
  override_field(model, "hidden", a.hidden);
  if (a.init_seed)
    model["init_seed"] = *a.init_seed;
  else if (!model.contains("init_seed"))
    model["init_seed"] = seed;

  json& train_cfg = resolved["train"];
  if (!train_cfg.is_object()) train_cfg = json::object();
  train_cfg["seed"] = seed;
  override_field(train_cfg, "epochs", a.epochs);
  override_field(train_cfg, "batch_size", a.batch_size);
  override_field(train_cfg, "refresh_every", a.refresh_every);
  override_field(train_cfg, "k_target", a.k_target);
  if (!train_cfg.contains("sgd")) train_cfg["sgd"] = json::object();
  override_field(train_cfg["sgd"], "lr0", a.lr);
  override_field(train_cfg["sgd"], "momentum", a.momentum);
  override_field(train_cfg["sgd"], "weight_decay", a.weight_decay);
  override_field(train_cfg["sgd"], "alpha", a.lr_alpha);
  override_field(train_cfg["sgd"], "beta", a.lr_beta);
  if (!train_cfg.contains("loss_weights")) train_cfg["loss_weights"] = json::object();
  override_field(train_cfg["loss_weights"], "lambda1", a.lambda1);
  override_field(train_cfg["loss_weights"], "lambda2", a.lambda2);
  override_field(train_cfg["loss_weights"], "lambda3", a.lambda3);

  EngineHandle engine;
  check("engine create", memspm_engine_create(model.dump().c_str(), &engine.ptr));
  // store the engine's fully-resolved view of its own config
  {
    char* cfg_raw = nullptr;
    check("engine config", memspm_engine_config(engine.ptr, &cfg_raw));
    resolved["model"] = json::parse(owned(cfg_raw));
  }

  const std::string checkpoint_path = (fs::path(out_dir) / "checkpoint.mspc").string();
  const std::string history_path = (fs::path(out_dir) / "history.csv").string();
  paths["checkpoint"] = checkpoint_path;
  paths["history"] = history_path;
  resolved["command"] = "train";
  write_text((fs::path(out_dir) / "train_config.json").string(), resolved.dump(2));

  check("train",
        memspm_train(engine.ptr, src, tgt, train_cfg.dump().c_str(), history_path.c_str()));
  check("save checkpoint", memspm_engine_save(engine.ptr, checkpoint_path.c_str()));

  std::cout << "trained " << train_cfg.value("epochs", std::size_t{60}) << " epochs; wrote "
            << checkpoint_path << " and " << history_path << "\n";
  return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::optional<std::string> config, checkpoint, source, target, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k_target;
  std::optional<std::string> scenario, dataset_name;
};

int run_eval(const EvalArgs& a) {
  json resolved;
  if (a.config) resolved = load_json_file(*a.config);
  json& paths = resolved["paths"];
  if (!paths.is_object()) paths = json::object();
  if (a.checkpoint) paths["checkpoint"] = *a.checkpoint;
  if (a.source) paths["source"] = *a.source;
  if (a.target) paths["target"] = *a.target;
  if (a.out) paths["out"] = *a.out;
  for (const char* key : {"checkpoint", "source", "target", "out"}) {
    if (!paths.contains(key)) {
      std::cerr << "eval: --" << key << " is required\n";
      return 1;
    }
  }
  const std::string out_dir = paths.at("out");
  fs::create_directories(out_dir);

  EngineHandle engine;
  check("engine load",
        memspm_engine_load(paths.at("checkpoint").get<std::string>().c_str(), &engine.ptr));
  DatasetHandle source, target;
  check("open source",
        memspm_dataset_open(paths.at("source").get<std::string>().c_str(), &source.ptr));
  check("open target",
        memspm_dataset_open(paths.at("target").get<std::string>().c_str(), &target.ptr));

  json& eval_cfg = resolved["eval"];
  if (!eval_cfg.is_object()) eval_cfg = json::object();
  override_field(eval_cfg, "seed", a.seed);
  override_field(eval_cfg, "k_target", a.k_target);
  override_field(eval_cfg, "scenario", a.scenario);
  override_field(eval_cfg, "dataset_name", a.dataset_name);
  if (!eval_cfg.contains("seed")) eval_cfg["seed"] = 1;

  DatasetHandle split_source, split_target;
  memspm_dataset_t* src = source.ptr;
  memspm_dataset_t* tgt = target.ptr;
  if (eval_cfg.contains("scenario")) {
    check("apply split", memspm_dataset_apply_split(
                             source.ptr, eval_cfg.at("scenario").get<std::string>().c_str(),
                             eval_cfg.at("dataset_name").get<std::string>().c_str(), 0,
                             &split_source.ptr));
    check("apply split", memspm_dataset_apply_split(
                             target.ptr, eval_cfg.at("scenario").get<std::string>().c_str(),
                             eval_cfg.at("dataset_name").get<std::string>().c_str(), 1,
                             &split_target.ptr));
    src = split_source.ptr;
    tgt = split_target.ptr;
  }

  char* metrics_raw = nullptr;
  check("evaluate",
        memspm_evaluate(engine.ptr, src, tgt, eval_cfg.dump().c_str(), &metrics_raw));
  const std::string metrics = owned(metrics_raw);

  const std::string metrics_path = (fs::path(out_dir) / "metrics.json").string();
  paths["metrics"] = metrics_path;
  resolved["command"] = "eval";
  write_text(metrics_path, metrics);
  write_text((fs::path(out_dir) / "eval_config.json").string(), resolved.dump(2));
  std::cout << metrics << "\n";
  return 0;
}

// ---- inspect ---------------------------------------------------------------

struct InspectArgs {
  std::optional<std::string> config, checkpoint, data, out;
};

int run_inspect(const InspectArgs& a) {
  json resolved;
  if (a.config) resolved = load_json_file(*a.config);
  json& paths = resolved["paths"];
  if (!paths.is_object()) paths = json::object();
  if (a.checkpoint) paths["checkpoint"] = *a.checkpoint;
  if (a.data) paths["data"] = *a.data;
  if (a.out) paths["out"] = *a.out;
  for (const char* key : {"checkpoint", "data", "out"}) {
    if (!paths.contains(key)) {
      std::cerr << "inspect: --" << key << " is required\n";
      return 1;
    }
  }
  const std::string out_dir = paths.at("out");
  fs::create_directories(out_dir);

  EngineHandle engine;
  check("engine load",
        memspm_engine_load(paths.at("checkpoint").get<std::string>().c_str(), &engine.ptr));
  DatasetHandle data;
  check("open data", memspm_dataset_open(paths.at("data").get<std::string>().c_str(), &data.ptr));

  char* report_raw = nullptr;
  check("inspect", memspm_inspect(engine.ptr, data.ptr, out_dir.c_str(), &report_raw));
  const std::string report = owned(report_raw);

  resolved["command"] = "inspect";
  write_text((fs::path(out_dir) / "inspect_config.json").string(), resolved.dump(2));
  std::cout << report << "\n";
  return 0;
}

// ---- gradcheck --------------------------------------------------------------

struct GradcheckArgs {
  std::optional<std::string> config, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> draws, n_items, n_subs, top_k, dim, in_dim, hidden, n_classes,
      batch;
  std::optional<double> step, tol;
};

int run_gradcheck(const GradcheckArgs& a) {
  json resolved;
  if (a.config) resolved = load_json_file(*a.config);
  json& cfg = resolved["gradcheck"];
  if (!cfg.is_object()) cfg = json::object();
  override_field(cfg, "seed", a.seed);
  override_field(cfg, "draws", a.draws);
  override_field(cfg, "n_items", a.n_items);
  override_field(cfg, "n_subs", a.n_subs);
  override_field(cfg, "top_k", a.top_k);
  override_field(cfg, "dim", a.dim);
  override_field(cfg, "in_dim", a.in_dim);
  override_field(cfg, "hidden", a.hidden);
  override_field(cfg, "n_classes", a.n_classes);
  override_field(cfg, "batch", a.batch);
  override_field(cfg, "step", a.step);
  override_field(cfg, "tol", a.tol);

  char* report_raw = nullptr;
  check("gradcheck", memspm_gradcheck(cfg.dump().c_str(), &report_raw));
  const json report = json::parse(owned(report_raw));

  for (const auto& [name, group] : report.at("groups").items()) {
    std::printf("%-10s max rel err %.3e  %s\n", name.c_str(),
                group.at("max_rel_err").get<double>(),
                group.at("passed").get<bool>() ? "ok" : "FAIL");
  }
  std::printf("resampled draws: %zu\n", report.at("resampled").get<std::size_t>());

  if (a.out) {
    fs::create_directories(*a.out);
    resolved["command"] = "gradcheck";
    write_text((fs::path(*a.out) / "gradcheck_report.json").string(), report.dump(2));
    write_text((fs::path(*a.out) / "gradcheck_config.json").string(), resolved.dump(2));
  }
  return report.at("passed").get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memory-assisted sub-prototype mining engine"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate the synthetic benchmark");
  gen_cmd->add_option("--config", gen.config);
  gen_cmd->add_option("--out", gen.out);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--dim", gen.dim);
  gen_cmd->add_option("--n-common", gen.n_common);
  gen_cmd->add_option("--n-src-private", gen.n_src_private);
  gen_cmd->add_option("--n-tgt-private", gen.n_tgt_private);
  gen_cmd->add_option("--subclusters", gen.subclusters);
  gen_cmd->add_option("--samples-per-subcluster", gen.samples);
  gen_cmd->add_option("--shift", gen.shift);
  gen_cmd->add_option("--noise", gen.noise);
  gen_cmd->add_option("--separation", gen.separation);

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "adapt a model to a target domain");
  train_cmd->add_option("--config", train.config);
  train_cmd->add_option("--source", train.source);
  train_cmd->add_option("--target", train.target);
  train_cmd->add_option("--out", train.out);
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--batch-size", train.batch_size);
  train_cmd->add_option("--refresh-every", train.refresh_every);
  train_cmd->add_option("--k-target", train.k_target);
  train_cmd->add_option("--n-items", train.n_items);
  train_cmd->add_option("--n-subs", train.n_subs);
  train_cmd->add_option("--top-k", train.top_k);
  train_cmd->add_option("--epsilon", train.epsilon);
  train_cmd->add_option("--hidden", train.hidden);
  train_cmd->add_option("--embed-dim", train.embed_dim);
  train_cmd->add_option("--encoder", train.encoder)
      ->check(CLI::IsMember({"precomputed", "random_projection"}));
  train_cmd->add_option("--encoder-seed", train.encoder_seed);
  train_cmd->add_option("--init-seed", train.init_seed);
  train_cmd->add_option("--lr", train.lr);
  train_cmd->add_option("--momentum", train.momentum);
  train_cmd->add_option("--weight-decay", train.weight_decay);
  train_cmd->add_option("--lr-alpha", train.lr_alpha);
  train_cmd->add_option("--lr-beta", train.lr_beta);
  train_cmd->add_option("--lambda1", train.lambda1);
  train_cmd->add_option("--lambda2", train.lambda2);
  train_cmd->add_option("--lambda3", train.lambda3);
  train_cmd->add_option("--scenario", train.scenario)
      ->check(CLI::IsMember({"PDA", "OSDA", "UniDA"}));
  train_cmd->add_option("--dataset-name", train.dataset_name);
  train_cmd->add_flag("--no-memory", train.no_memory, "ablation: use the query embedding as-is");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a target domain");
  eval_cmd->add_option("--config", eval.config);
  eval_cmd->add_option("--checkpoint", eval.checkpoint);
  eval_cmd->add_option("--source", eval.source);
  eval_cmd->add_option("--target", eval.target);
  eval_cmd->add_option("--out", eval.out);
  eval_cmd->add_option("--seed", eval.seed);
  eval_cmd->add_option("--k-target", eval.k_target);
  eval_cmd->add_option("--scenario", eval.scenario)
      ->check(CLI::IsMember({"PDA", "OSDA", "UniDA"}));
  eval_cmd->add_option("--dataset-name", eval.dataset_name);

  InspectArgs inspect;
  CLI::App* inspect_cmd =
      app.add_subcommand("inspect", "report memory usage and mined sub-class structure");
  inspect_cmd->add_option("--config", inspect.config);
  inspect_cmd->add_option("--checkpoint", inspect.checkpoint);
  inspect_cmd->add_option("--data", inspect.data);
  inspect_cmd->add_option("--out", inspect.out);

  GradcheckArgs gradcheck;
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "verify analytic gradients by finite differences");
  gradcheck_cmd->add_option("--config", gradcheck.config);
  gradcheck_cmd->add_option("--out", gradcheck.out);
  gradcheck_cmd->add_option("--seed", gradcheck.seed);
  gradcheck_cmd->add_option("--draws", gradcheck.draws);
  gradcheck_cmd->add_option("--n-items", gradcheck.n_items);
  gradcheck_cmd->add_option("--n-subs", gradcheck.n_subs);
  gradcheck_cmd->add_option("--top-k", gradcheck.top_k);
  gradcheck_cmd->add_option("--dim", gradcheck.dim);
  gradcheck_cmd->add_option("--in-dim", gradcheck.in_dim);
  gradcheck_cmd->add_option("--hidden", gradcheck.hidden);
  gradcheck_cmd->add_option("--n-classes", gradcheck.n_classes);
  gradcheck_cmd->add_option("--batch", gradcheck.batch);
  gradcheck_cmd->add_option("--step", gradcheck.step);
  gradcheck_cmd->add_option("--tol", gradcheck.tol);

  CLI11_PARSE(app, argc, argv);

  if (gen_cmd->parsed()) return run_gen(gen);
  if (train_cmd->parsed()) return run_train(train);
  if (eval_cmd->parsed()) return run_eval(eval);
  if (inspect_cmd->parsed()) return run_inspect(inspect);
  if (gradcheck_cmd->parsed()) return run_gradcheck(gradcheck);
  return 1;
}
