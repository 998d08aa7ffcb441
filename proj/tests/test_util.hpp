// SPDX-License-Identifier: Apache-2.0
#ifndef ASRKIT_TEST_UTIL_HPP
#define ASRKIT_TEST_UTIL_HPP

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "asrkit/types.hpp"

namespace asrkit::testutil {

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<unsigned> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("asrkit_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const {
    return path / name;
  }
};

inline std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline FeatureSequence random_sequence(std::mt19937_64& rng, std::size_t max_count,
                                       std::size_t max_dim,
                                       double zero_frame_prob = 0.0) {
  std::uniform_int_distribution<std::size_t> count_dist(0, max_count);
  std::uniform_int_distribution<std::size_t> dim_dist(1, max_dim);
  std::uniform_real_distribution<float> value(-1.0f, 1.0f);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  FeatureSequence seq(dim_dist(rng));
  std::size_t count = count_dist(rng);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<float> frame(seq.dim);
    if (u01(rng) >= zero_frame_prob)
      for (auto& v : frame) v = value(rng);
    seq.push_frame(frame);
  }
  return seq;
}

}  // namespace asrkit::testutil

#endif  // ASRKIT_TEST_UTIL_HPP
