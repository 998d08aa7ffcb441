// SPDX-License-Identifier: Apache-2.0
#ifndef ASRKIT_TYPES_HPP
#define ASRKIT_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace asrkit {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind : int {
  kUsage = 1,      // bad arguments / configuration
  kData = 2,       // malformed or inconsistent input data
  kCollapsed = 3,  // refinement produced an empty retained set
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(ErrorKind::kUsage, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
  throw Error(ErrorKind::kData, msg);
}

// One utterance's frame sequence: `count()` frames of `dim` floats each,
// stored row-major.
struct FeatureSequence {
  std::size_t dim = 0;
  std::vector<float> data;

  FeatureSequence() = default;
  explicit FeatureSequence(std::size_t d) : dim(d) {}

  std::size_t count() const { return dim == 0 ? 0 : data.size() / dim; }

  std::span<const float> frame(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
  std::span<float> frame(std::size_t i) {
    return {data.data() + i * dim, dim};
  }

  void push_frame(std::span<const float> f) {
    data.insert(data.end(), f.begin(), f.end());
  }

  bool valid() const {
    if (dim == 0) return data.empty();
    if (data.size() % dim != 0) return false;
    for (float v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const FeatureSequence&) const = default;
};

// One manifest record. `ground_truth` and `frame_classes` exist only for
// synthetic corpora and are never visible through the transcriber contract.
struct Utterance {
  std::string id;
  std::string features;  // path, relative to the manifest directory
  std::string weak_label;
  std::optional<std::string> anchor_label;
  bool precise = false;
  std::optional<std::string> ground_truth;
  std::optional<std::string> frame_classes;  // sidecar path

  bool operator==(const Utterance&) const = default;
};

}  // namespace asrkit

#endif  // ASRKIT_TYPES_HPP
