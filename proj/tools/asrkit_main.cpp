// SPDX-License-Identifier: Apache-2.0
//
// asrkit CLI: thin flag parser over the libasrkit C API. Every subcommand
// assembles a parameter record, hands it to asrkit_run_command and exits
// with the returned status (0 ok, 1 usage, 2 data, 3 refinement collapsed).

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "asrkit.h"

namespace {

using Json = nlohmann::json;

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError("expected a comma-separated number list, got \"" +
                                 csv + "\"");
    }
  }
  return out;
}

// Collects flag values into the command's parameter record, on top of an
// optional --config preload, so explicit flags always win.
struct ParamBuilder {
  CLI::App* cmd;
  std::string config_path;
  std::vector<std::function<void(Json&)>> appliers;

  explicit ParamBuilder(CLI::App* c) : cmd(c) {
    cmd->add_option("--config", config_path,
                    "resolved_config.json from a previous run");
  }

  template <typename T>
  void opt(const std::string& flag, const std::string& key, T& storage,
           const std::string& help) {
    auto* o = cmd->add_option(flag, storage, help);
    appliers.push_back([o, key, &storage](Json& params) {
      if (o->count() > 0) params[key] = storage;
    });
  }

  void flag(const std::string& name, const std::string& key, bool& storage,
            const std::string& help, bool value_when_set = true) {
    auto* o = cmd->add_flag(name, storage, help);
    appliers.push_back([o, key, value_when_set](Json& params) {
      if (o->count() > 0) params[key] = value_when_set;
    });
  }

  void list_opt(const std::string& flag, const std::string& key,
                std::string& storage, const std::string& help) {
    auto* o = cmd->add_option(flag, storage, help);
    appliers.push_back([o, key, &storage](Json& params) {
      if (o->count() > 0) params[key] = parse_list(storage);
    });
  }

  Json build(const std::string& expected_command) const {
    Json params = Json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw CLI::ValidationError("cannot open config " + config_path);
      Json cfg;
      try {
        is >> cfg;
      } catch (const Json::exception& e) {
        throw CLI::ValidationError("malformed config: " + std::string(e.what()));
      }
      if (cfg.contains("command") &&
          cfg["command"].get<std::string>() != expected_command)
        throw CLI::ValidationError("config is for command \"" +
                                   cfg["command"].get<std::string>() + "\"");
      if (cfg.contains("params")) params = cfg["params"];
    }
    for (const auto& apply : appliers) apply(params);
    return params;
  }
};

int run(const std::string& name, const Json& params) {
  asrkit_status status = asrkit_run_command(name.c_str(), params.dump().c_str());
  if (status != ASRKIT_OK)
    std::fprintf(stderr, "asrkit %s: %s\n", name.c_str(), asrkit_last_error());
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequence compression, pruning sweeps and weak-label refinement "
               "over synthetic ASR corpora"};
  app.require_subcommand(1);

  std::string manifest, out, policy, thetas, kept, in, model;
  double theta = 1.0, tau = 10.0, sigma = 0.05, band_lo = -0.2, band_hi = 0.7;
  double weak_err = 0.0, anchor_err = 0.0;
  double cost_quad = 1.0, cost_lin = 0.0, cost_const = 0.0;
  int iters = 1, reps = 5, workers = 1;
  int alphabet_size = 8, dim = 16, utterances = 100;
  int tokens_min = 3, tokens_max = 8, frames_min = 4, frames_max = 8;
  int blanks_min = 1, blanks_max = 3;
  std::uint64_t seed = 0, length = 2000;
  bool normalize = false, no_bypass = false;

  auto* gen = app.add_subcommand("gen", "generate a seeded synthetic corpus");
  ParamBuilder gen_params(gen);
  gen_params.opt("--out", "out", out, "output corpus directory");
  gen_params.opt("--alphabet-size", "alphabet_size", alphabet_size, "token classes K");
  gen_params.opt("--dim", "dim", dim, "feature dimension D");
  gen_params.opt("--utterances", "utterances", utterances, "utterance count");
  gen_params.opt("--tokens-min", "tokens_min", tokens_min, "min tokens per utterance");
  gen_params.opt("--tokens-max", "tokens_max", tokens_max, "max tokens per utterance");
  gen_params.opt("--frames-min", "frames_min", frames_min, "min frames per token");
  gen_params.opt("--frames-max", "frames_max", frames_max, "max frames per token");
  gen_params.opt("--blanks-min", "blanks_min", blanks_min, "min blank frames between tokens");
  gen_params.opt("--blanks-max", "blanks_max", blanks_max, "max blank frames between tokens");
  gen_params.opt("--noise-sigma", "noise_sigma", sigma, "per-component Gaussian noise");
  gen_params.opt("--band-lo", "band_lo", band_lo, "centroid similarity band, low");
  gen_params.opt("--band-hi", "band_hi", band_hi, "centroid similarity band, high");
  gen_params.opt("--weak-err", "weak_error_rate", weak_err, "weak label corruption rate");
  gen_params.opt("--anchor-err", "anchor_error_rate", anchor_err, "anchor label corruption rate");
  gen_params.opt("--seed", "seed", seed, "generator seed");

  auto* prune = app.add_subcommand("prune", "prune redundant adjacent frames");
  ParamBuilder prune_params(prune);
  prune_params.opt("--manifest", "manifest", manifest, "corpus manifest");
  prune_params.opt("--out", "out", out, "output directory");
  prune_params.opt("--theta", "theta", theta, "similarity threshold in [-1, 1]");
  prune_params.opt("--policy", "policy", policy, "original_adjacent | last_kept");
  prune_params.opt("--workers", "workers", workers, "worker threads");

  auto* refine = app.add_subcommand("refine", "iterative weak-label refinement");
  ParamBuilder refine_params(refine);
  refine_params.opt("--manifest", "manifest", manifest, "corpus manifest");
  refine_params.opt("--out", "out", out, "output directory");
  refine_params.opt("--tau", "tau", tau, "edit-distance agreement threshold");
  refine_params.opt("--iters", "iters", iters, "refinement iterations");
  refine_params.flag("--normalize", "normalize", normalize,
                     "compare distance / anchor length against tau");
  refine_params.flag("--no-bypass-precise", "bypass_precise", no_bypass,
                     "filter and relabel precise entries too", false);
  refine_params.opt("--init-model", "init_model", model, "initial transcriber model");
  refine_params.opt("--alphabet-size", "alphabet_size", alphabet_size,
                    "classes for sidecar pretraining (default: inferred)");
  refine_params.opt("--workers", "workers", workers, "worker threads");
  refine_params.opt("--seed", "seed", seed, "recorded for reproducibility");

  auto* sweep = app.add_subcommand("sweep", "threshold sweep: kept fraction, CER, SR");
  ParamBuilder sweep_params(sweep);
  sweep_params.opt("--manifest", "manifest", manifest, "corpus manifest");
  sweep_params.opt("--out", "out", out, "output directory");
  sweep_params.list_opt("--thetas", "thetas", thetas, "comma-separated thresholds");
  sweep_params.opt("--policy", "policy", policy, "original_adjacent | last_kept");
  sweep_params.opt("--cost-quad", "cost_quad", cost_quad, "quadratic decode cost");
  sweep_params.opt("--cost-lin", "cost_lin", cost_lin, "linear decode cost");
  sweep_params.opt("--cost-const", "cost_const", cost_const, "fixed decode cost");
  sweep_params.opt("--reps", "reps", reps, "timing repetitions (median)");
  sweep_params.opt("--workers", "workers", workers, "worker threads");
  sweep_params.opt("--seed", "seed", seed, "recorded for reproducibility");

  auto* eval = app.add_subcommand("eval", "CER table against hidden ground truth");
  ParamBuilder eval_params(eval);
  eval_params.opt("--manifest", "manifest", manifest, "corpus manifest");
  eval_params.opt("--out", "out", out, "output directory");
  eval_params.opt("--model", "model", model, "centroid model (default: score weak labels)");
  eval_params.opt("--theta", "theta", theta, "prune before decoding");
  eval_params.opt("--policy", "policy", policy, "original_adjacent | last_kept");
  eval_params.opt("--workers", "workers", workers, "worker threads");

  auto* bench = app.add_subcommand("bench", "mock-decoder speedup measurement");
  ParamBuilder bench_params(bench);
  bench_params.opt("--out", "out", out, "output directory");
  bench_params.opt("--cost-quad", "cost_quad", cost_quad, "quadratic decode cost");
  bench_params.opt("--cost-lin", "cost_lin", cost_lin, "linear decode cost");
  bench_params.opt("--cost-const", "cost_const", cost_const, "fixed decode cost");
  bench_params.opt("--length", "length", length, "uncompressed sequence length");
  bench_params.list_opt("--kept", "kept", kept, "comma-separated kept fractions");
  bench_params.opt("--reps", "reps", reps, "timing repetitions (median, >= 3)");

  auto* report = app.add_subcommand("report", "render a sweep CSV as an SVG chart");
  ParamBuilder report_params(report);
  report_params.opt("--in", "in", in, "sweep.csv from the sweep command");
  report_params.opt("--out", "out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1
  }

  try {
    if (gen->parsed()) return run("gen", gen_params.build("gen"));
    if (prune->parsed()) return run("prune", prune_params.build("prune"));
    if (refine->parsed()) return run("refine", refine_params.build("refine"));
    if (sweep->parsed()) return run("sweep", sweep_params.build("sweep"));
    if (eval->parsed()) return run("eval", eval_params.build("eval"));
    if (bench->parsed()) return run("bench", bench_params.build("bench"));
    if (report->parsed()) return run("report", report_params.build("report"));
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "asrkit: %s\n", e.what());
    return 1;
  }
  return 1;
}
