// SPDX-License-Identifier: Apache-2.0
#ifndef ASRKIT_METRICS_HPP
#define ASRKIT_METRICS_HPP

#include <algorithm>
#include <cstddef>
#include <string_view>
#include <vector>

#include "asrkit/types.hpp"

namespace asrkit {

// Unit-cost Levenshtein distance over arbitrary token sequences.
template <typename Seq>
std::size_t edit_distance_seq(const Seq& a, const Seq& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Character-granularity distance, the default for CER-style evaluation.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  return edit_distance_seq(a, b);
}

// edit_distance(hyp, ref) / |ref|; throws Error(kData) on empty reference.
double cer(std::string_view hyp, std::string_view ref);

// baseline / compressed; 1.0 when both are zero, error when only the
// denominator is zero.
double cer_retention(double cer_baseline, double cer_compressed);

// t_original / t_accelerated; both must be strictly positive.
double speedup_ratio(double t_original, double t_accelerated);

// Per-sequence decode cost: quad*L^2 + lin*L + konst.
struct CostModel {
  double quad = 0.0;
  double lin = 0.0;
  double konst = 0.0;

  double cost(std::size_t length) const {
    double l = static_cast<double>(length);
    return quad * l * l + lin * l + konst;
  }
  void validate() const;  // at least one coefficient strictly positive
};

// Pruned length rounds to max(1, round(r*L)).
std::size_t compressed_length(std::size_t length, double kept_fraction);
double predicted_sr(const CostModel& model, std::size_t length, double kept_fraction);

}  // namespace asrkit

#endif  // ASRKIT_METRICS_HPP
