// SPDX-License-Identifier: Apache-2.0
#ifndef ASRKIT_CORPUS_HPP
#define ASRKIT_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "asrkit/types.hpp"

namespace asrkit {

// Binary feature file: "EFEA", version u32 = 1, count u32, dim u32, then
// count*dim little-endian IEEE-754 floats, row-major by frame.
void write_features(const FeatureSequence& seq, const std::filesystem::path& path);
FeatureSequence read_features(const std::filesystem::path& path);

// Manifest: UTF-8, one JSON object per line. Unknown keys are rejected,
// ids must be unique, order is preserved.
std::vector<Utterance> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<Utterance>& utts, const std::filesystem::path& path);
std::string manifest_line(const Utterance& u);

// Frame-class sidecar: one class index per line, -1 = blank.
std::vector<int> read_frame_classes(const std::filesystem::path& path);
void write_frame_classes(const std::vector<int>& classes, const std::filesystem::path& path);

// Resolves an utterance-relative path against the directory of its manifest.
std::filesystem::path resolve_ref(const std::filesystem::path& manifest_path,
                                  const std::string& ref);

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct SynthSpec {
  int alphabet_size = 8;   // K, classes "a".."z" truncated
  int dim = 16;            // D
  int utterances = 100;
  IntRange tokens_per_utterance{3, 8};
  IntRange frames_per_token{4, 8};
  IntRange blank_frames_between_tokens{1, 3};
  double noise_sigma = 0.05;
  double centroid_similarity_lo = -0.2;
  double centroid_similarity_hi = 0.7;
  double weak_label_error_rate = 0.0;
  double anchor_error_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws Error(kUsage) on bad fields
};

// First K lowercase letters.
std::string alphabet_for(int alphabet_size);

// Applies per-character substitution/insertion/deletion, each at rate/3.
std::string corrupt_label(const std::string& label, double rate,
                          const std::string& alphabet, std::mt19937_64& rng);

// Writes manifest.jsonl, features/, classes/ and centroids.fea under out_dir.
// Deterministic for a fixed spec (including seed). Returns the manifest path.
std::filesystem::path generate_corpus(const SynthSpec& spec,
                                      const std::filesystem::path& out_dir);

}  // namespace asrkit

#endif  // ASRKIT_CORPUS_HPP
