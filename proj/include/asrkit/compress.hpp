// SPDX-License-Identifier: Apache-2.0
#ifndef ASRKIT_COMPRESS_HPP
#define ASRKIT_COMPRESS_HPP

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "asrkit/metrics.hpp"
#include "asrkit/types.hpp"

namespace asrkit {

enum class PrunePolicy {
  // Frame j is removed iff sim(x_{j-1}, x_j) > theta, always against the
  // original predecessor. Admits kept-set monotonicity in theta.
  kOriginalAdjacent,
  // Frame j is removed iff sim(last kept frame, x_j) > theta; bounds
  // cumulative drift.
  kLastKept,
};

struct PruneConfig {
  double theta = 1.0;
  PrunePolicy policy = PrunePolicy::kOriginalAdjacent;
  double zero_norm_epsilon = 1e-12;

  void validate() const;
};

struct PruneResult {
  std::vector<std::size_t> kept_indices;  // strictly increasing, starts at 0
  std::size_t original_count = 0;
  double kept_fraction = 1.0;  // kept/total; 1.0 for empty input
};

// x.y / (|x||y|); 0.0 when either norm is below epsilon.
double cosine_sim(std::span<const float> x, std::span<const float> y,
                  double epsilon = 1e-12);

PruneResult prune_indices(const FeatureSequence& seq, const PruneConfig& cfg);
FeatureSequence apply_prune(const FeatureSequence& seq, const PruneResult& result);

struct SweepItem {
  const Utterance* utterance = nullptr;
  const FeatureSequence* full = nullptr;
  FeatureSequence pruned;
  PruneResult prune;
};

struct SweepEval {
  double cer = 0.0;
  double seconds = 0.0;
};

struct SweepRow {
  double theta;
  double kept_fraction;  // mean over utterances
  double cer;
  double cer_retention;  // vs the theta = 1.0 baseline
  double sr_measured;    // baseline seconds / this row's seconds
  double sr_predicted;   // aggregate cost-model ratio
};

using SweepEvaluator = std::function<SweepEval(double theta, const std::vector<SweepItem>&)>;

// One row per threshold; retention and measured SR are relative to an
// internal theta = 1.0 baseline (emitted as a row only when requested).
// Utterances are processed in id order; `workers` parallelizes pruning.
std::vector<SweepRow> sweep(const std::filesystem::path& manifest_path,
                            const std::vector<double>& thresholds,
                            const PruneConfig& base_cfg, const CostModel& cost,
                            const SweepEvaluator& evaluator, int workers = 1);

// Header: theta,kept_fraction,cer,cer_retention,sr_measured,sr_predicted.
// Values use 6 significant digits.
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::filesystem::path& path);

}  // namespace asrkit

#endif  // ASRKIT_COMPRESS_HPP
