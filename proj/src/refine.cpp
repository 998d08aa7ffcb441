// SPDX-License-Identifier: Apache-2.0
#include "asrkit/refine.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "asrkit/corpus.hpp"
#include "asrkit/metrics.hpp"
#include "parallel_for.hpp"

namespace asrkit {

namespace {

using Json = nlohmann::json;

std::vector<Utterance> sorted_by_id(std::vector<Utterance> utts) {
  std::sort(utts.begin(), utts.end(),
            [](const Utterance& a, const Utterance& b) { return a.id < b.id; });
  return utts;
}

// Corpus-level CER: total edit distance over total reference length,
// restricted to entries carrying hidden ground truth.
std::optional<double> hidden_truth_cer(const std::vector<Utterance>& utts) {
  std::size_t dist = 0, len = 0;
  for (const auto& u : utts) {
    if (!u.ground_truth || u.ground_truth->empty()) continue;
    dist += edit_distance(u.weak_label, *u.ground_truth);
    len += u.ground_truth->size();
  }
  if (len == 0) return std::nullopt;
  return static_cast<double>(dist) / static_cast<double>(len);
}

Json stats_record(const IterationStats& s) {
  Json j;
  j["iteration"] = s.iteration;
  j["input_count"] = s.input_count;
  j["retained_count"] = s.retained_count;
  j["mean_edit_distance_to_anchor"] = s.mean_edit_distance_to_anchor;
  j["relabeled_count"] = s.relabeled_count;
  j["missing_anchor_count"] = s.missing_anchor_count;
  if (s.hidden_truth_cer) j["hidden_truth_cer"] = *s.hidden_truth_cer;
  return j;
}

}  // namespace

void RefineConfig::validate() const {
  if (tau < 0) throw_usage("tau must be non-negative");
  if (iterations < 1) throw_usage("iterations must be >= 1");
}

std::vector<std::pair<std::string, std::string>> label_pass(
    const Transcriber& model, const std::vector<Utterance>& utterances,
    const std::filesystem::path& manifest_path, int workers) {
  auto utts = sorted_by_id(utterances);
  std::vector<std::pair<std::string, std::string>> out(utts.size());
  parallel_for(utts.size(), workers, [&](std::size_t i) {
    FeatureSequence seq;
    try {
      seq = read_features(resolve_ref(manifest_path, utts[i].features));
    } catch (const Error& e) {
      throw_data("label_pass: utterance \"" + utts[i].id + "\": " + e.what());
    }
    out[i] = {utts[i].id, model.transcribe(seq)};
  });
  return out;
}

FilterOutcome agreement_filter(const std::vector<std::string>& hypotheses,
                               const std::vector<Utterance>& utterances,
                               double tau, bool normalize, bool bypass_precise) {
  if (hypotheses.size() != utterances.size())
    throw_usage("agreement_filter: hypothesis/utterance count mismatch");
  FilterOutcome out;
  double dist_sum = 0.0;
  std::size_t dist_n = 0;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const Utterance& u = utterances[i];
    if (u.precise && bypass_precise) {
      out.retained.push_back(u);  // trusted label, kept verbatim
      continue;
    }
    if (!u.anchor_label) {
      ++out.missing_anchor_count;
      continue;
    }
    auto d = static_cast<double>(edit_distance(hypotheses[i], *u.anchor_label));
    dist_sum += d;
    ++dist_n;
    if (normalize) d /= static_cast<double>(std::max<std::size_t>(1, u.anchor_label->size()));
    if (d <= tau) {
      Utterance kept = u;
      kept.weak_label = hypotheses[i];
      out.retained.push_back(std::move(kept));
      ++out.relabeled_count;
    }
  }
  out.mean_edit_distance_to_anchor =
      dist_n == 0 ? 0.0 : dist_sum / static_cast<double>(dist_n);
  return out;
}

RefineOutput refine_loop(const std::filesystem::path& manifest_path,
                         Transcriber& model, const RefineConfig& cfg,
                         const std::filesystem::path& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  auto dataset = sorted_by_id(read_manifest(manifest_path));
  if (dataset.empty()) throw_data("refine_loop: empty dataset");

  // Feature cache; the loop relabels the full dataset every iteration.
  std::vector<FeatureSequence> features(dataset.size());
  parallel_for(dataset.size(), cfg.workers, [&](std::size_t i) {
    try {
      features[i] = read_features(resolve_ref(manifest_path, dataset[i].features));
    } catch (const Error& e) {
      throw_data("refine_loop: utterance \"" + dataset[i].id + "\": " + e.what());
    }
  });
  std::unordered_map<std::string, const FeatureSequence*> by_id;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    by_id[dataset[i].id] = &features[i];

  RefineOutput output;
  fs::create_directories(out_dir);

  auto persist_iteration = [&](int iter, const std::vector<Utterance>& retained,
                               IterationStats stats) {
    fs::path dir = out_dir / ("iter_" + std::to_string(iter));
    fs::create_directories(dir);
    write_manifest(retained, dir / "manifest");
    output.iteration_manifests.push_back(dir / "manifest");
    stats.iteration = iter;
    stats.retained_count = retained.size();
    stats.hidden_truth_cer = hidden_truth_cer(retained);
    output.stats.push_back(stats);
  };

  // Iteration 0: R is the full hybrid dataset.
  std::vector<Utterance> refined = dataset;
  {
    IterationStats s;
    s.input_count = dataset.size();
    double dist_sum = 0.0;
    std::size_t dist_n = 0;
    for (const auto& u : dataset) {
      if (!u.anchor_label || (u.precise && cfg.bypass_precise)) continue;
      dist_sum += static_cast<double>(edit_distance(u.weak_label, *u.anchor_label));
      ++dist_n;
    }
    s.mean_edit_distance_to_anchor = dist_n == 0 ? 0.0 : dist_sum / static_cast<double>(dist_n);
    persist_iteration(0, refined, s);
  }

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    std::vector<LabeledExample> examples;
    examples.reserve(refined.size());
    for (const auto& u : refined)
      examples.push_back({u.id, by_id.at(u.id), u.weak_label});
    model.train(examples);

    std::vector<std::string> hypotheses(dataset.size());
    parallel_for(dataset.size(), cfg.workers, [&](std::size_t i) {
      hypotheses[i] = model.transcribe(features[i]);
    });

    FilterOutcome outcome = agreement_filter(hypotheses, dataset, cfg.tau,
                                             cfg.normalize_distance,
                                             cfg.bypass_precise);
    if (outcome.retained.empty())
      throw Error(ErrorKind::kCollapsed,
                  "refinement collapsed: empty retained set at iteration " +
                      std::to_string(iter));

    refined = std::move(outcome.retained);
    IterationStats s;
    s.input_count = dataset.size();
    s.relabeled_count = outcome.relabeled_count;
    s.missing_anchor_count = outcome.missing_anchor_count;
    s.mean_edit_distance_to_anchor = outcome.mean_edit_distance_to_anchor;
    persist_iteration(iter, refined, s);
    model.save(out_dir / ("iter_" + std::to_string(iter)) / "model.json");
  }

  output.stats_path = out_dir / "stats";
  {
    std::ofstream os(output.stats_path, std::ios::trunc);
    if (!os) throw_data("refine_loop: cannot write " + output.stats_path.string());
    for (const auto& s : output.stats) os << stats_record(s).dump() << '\n';
  }
  output.model_path = out_dir / "model.json";
  model.save(output.model_path);
  return output;
}

}  // namespace asrkit
