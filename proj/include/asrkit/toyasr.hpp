// SPDX-License-Identifier: Apache-2.0
#ifndef ASRKIT_TOYASR_HPP
#define ASRKIT_TOYASR_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "asrkit/compress.hpp"
#include "asrkit/refine.hpp"
#include "asrkit/types.hpp"

namespace asrkit {

enum class TrainMode {
  kFromScratch,   // train on (possibly pruned) data
  kRecalibrate,   // fit only the per-dimension affine map
  kNone,          // inference only
};

// Per-dimension affine input map applied before centroid matching:
// v' = scale[d] * v + shift[d]. 2*D parameters, identity by default.
struct Recalibration {
  std::vector<float> scale;
  std::vector<float> shift;

  static Recalibration identity(std::size_t dim) {
    return {std::vector<float>(dim, 1.0f), std::vector<float>(dim, 0.0f)};
  }
  bool operator==(const Recalibration&) const = default;
};

// Nearest-centroid frame classifier with blank-aware run collapse.
// Satisfies the Transcriber contract; inside the refinement loop it trains
// itself by forced-aligning each sequence to its label with the current
// centroids (monotonic Viterbi over a blank-interleaved state chain) and
// re-estimating centroids as per-class means.
class CentroidModel final : public Transcriber {
 public:
  CentroidModel() = default;
  CentroidModel(std::vector<std::vector<float>> class_centroids,
                std::vector<float> blank_centroid, std::string alphabet);

  std::size_t dim() const { return blank_centroid_.size(); }
  std::size_t num_classes() const { return class_centroids_.size(); }
  const std::string& alphabet() const { return alphabet_; }
  const std::vector<std::vector<float>>& class_centroids() const { return class_centroids_; }
  const std::vector<float>& blank_centroid() const { return blank_centroid_; }
  const Recalibration& recalibration() const { return recal_; }
  void set_recalibration(Recalibration r);

  // Class index per frame, -1 for blank; recalibration applied first.
  std::vector<int> classify_frames(const FeatureSequence& seq) const;
  // Forced alignment of seq to label: per-frame class, -1 for blank.
  std::vector<int> align(const FeatureSequence& seq, const std::string& label) const;

  // Transcriber contract.
  void train(const std::vector<LabeledExample>& examples) override;
  std::string transcribe(const FeatureSequence& seq) const override;
  std::unique_ptr<Transcriber> snapshot() const override;
  void save(const std::filesystem::path& path) const override;

  static CentroidModel load(const std::filesystem::path& path);

  bool operator==(const CentroidModel& o) const {
    return class_centroids_ == o.class_centroids_ &&
           blank_centroid_ == o.blank_centroid_ && recal_ == o.recal_ &&
           alphabet_ == o.alphabet_;
  }

 private:
  std::vector<std::vector<float>> class_centroids_;  // K x D
  std::vector<float> blank_centroid_;                // D
  Recalibration recal_;
  std::string alphabet_;  // K characters
};

// Each class centroid becomes the mean of its (optionally pruned) frames,
// supervised by the frame-class sidecars. Errors on a missing sidecar or a
// class with no frames. Recalibration is reset to identity.
CentroidModel train_from_scratch(const std::vector<Utterance>& utterances,
                                 const std::filesystem::path& manifest_path,
                                 int alphabet_size,
                                 std::optional<PruneConfig> prune = std::nullopt);

struct RecalDiagnostics {
  std::vector<std::size_t> degenerate_dims;  // zero input variance, scale forced to 1
};

// Ordinary least squares per dimension, mapping (possibly pruned) frame
// components to their true-class centroid components. Centroids stay frozen;
// exactly 2*D parameters change.
RecalDiagnostics recalibrate(CentroidModel& model,
                             const std::vector<Utterance>& subset,
                             const std::filesystem::path& manifest_path,
                             std::optional<PruneConfig> prune = std::nullopt);

std::uint64_t feature_fingerprint(const FeatureSequence& seq);

// Test double: returns hidden ground truth corrupted at rate p. Training
// shrinks p by alpha times the quality of the provided labels. Keyed by a
// fingerprint of the frame bytes so it never sees manifest fields.
class NoisyOracle final : public Transcriber {
 public:
  NoisyOracle(double error_rate, double improvement_coefficient,
              std::uint64_t seed, std::string alphabet);

  // Harness-only: register hidden truth for a sequence.
  void register_truth(const FeatureSequence& seq, const std::string& truth);

  double error_rate() const { return error_rate_; }

  void train(const std::vector<LabeledExample>& examples) override;
  std::string transcribe(const FeatureSequence& seq) const override;
  std::unique_ptr<Transcriber> snapshot() const override;
  void save(const std::filesystem::path& path) const override;

 private:
  double error_rate_;
  double alpha_;
  std::uint64_t seed_;
  std::string alphabet_;
  std::unordered_map<std::uint64_t, std::string> truth_;
};

}  // namespace asrkit

#endif  // ASRKIT_TOYASR_HPP
