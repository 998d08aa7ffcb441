// SPDX-License-Identifier: Apache-2.0
#ifndef ASRKIT_REFINE_HPP
#define ASRKIT_REFINE_HPP

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asrkit/types.hpp"

namespace asrkit {

struct LabeledExample {
  std::string id;
  const FeatureSequence* features = nullptr;
  std::string label;
};

// Behavioral contract for the model in the refinement loop. Implementations
// see only (features, label) pairs: ground truth and frame-class sidecars
// are never reachable through this interface.
class Transcriber {
 public:
  virtual ~Transcriber() = default;
  virtual void train(const std::vector<LabeledExample>& examples) = 0;
  // Must be deterministic for a fixed internal state.
  virtual std::string transcribe(const FeatureSequence& seq) const = 0;
  virtual std::unique_ptr<Transcriber> snapshot() const = 0;
  virtual void save(const std::filesystem::path& path) const = 0;
};

struct RefineConfig {
  double tau = 10.0;  // edit-distance threshold; interpreted per normalize_distance
  int iterations = 1;
  bool normalize_distance = false;  // distance / |anchor| instead of absolute
  bool bypass_precise = true;       // precise entries kept verbatim, never relabeled
  int workers = 1;

  void validate() const;
};

struct IterationStats {
  int iteration = 0;
  std::size_t input_count = 0;
  std::size_t retained_count = 0;
  double mean_edit_distance_to_anchor = 0.0;
  std::size_t relabeled_count = 0;
  std::size_t missing_anchor_count = 0;
  std::optional<double> hidden_truth_cer;  // corpus-level, when truth present
};

struct RefineOutput {
  std::vector<std::filesystem::path> iteration_manifests;  // iter 0..n
  std::vector<IterationStats> stats;
  std::filesystem::path stats_path;
  std::filesystem::path model_path;  // final transcriber snapshot
};

// One hypothesis per utterance, ordered by id.
std::vector<std::pair<std::string, std::string>> label_pass(
    const Transcriber& model, const std::vector<Utterance>& utterances,
    const std::filesystem::path& manifest_path, int workers = 1);

struct FilterOutcome {
  std::vector<Utterance> retained;  // labels replaced by the hypotheses
  std::size_t relabeled_count = 0;
  std::size_t missing_anchor_count = 0;
  double mean_edit_distance_to_anchor = 0.0;
};

// Keeps exactly the anchored pairs with edit_distance(hyp, anchor) <= tau
// (or distance/|anchor| <= tau when normalize). Retained entries carry the
// hypothesis as their new label. hypotheses[i] must correspond to
// utterances[i]. Entries lacking an anchor are dropped and counted;
// precise entries pass through untouched when bypass_precise.
FilterOutcome agreement_filter(const std::vector<std::string>& hypotheses,
                               const std::vector<Utterance>& utterances,
                               double tau, bool normalize,
                               bool bypass_precise = true);

// Algorithm: R starts as the full dataset; each iteration trains the model
// on R, relabels the whole dataset and re-filters it against the anchors.
// Persists iter_<k>/manifest and a stats record per iteration under out_dir.
RefineOutput refine_loop(const std::filesystem::path& manifest_path,
                         Transcriber& model, const RefineConfig& cfg,
                         const std::filesystem::path& out_dir);

}  // namespace asrkit

#endif  // ASRKIT_REFINE_HPP
