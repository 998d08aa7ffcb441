// SPDX-License-Identifier: Apache-2.0
#include "asrkit/metrics.hpp"

#include <cmath>

namespace asrkit {

double cer(std::string_view hyp, std::string_view ref) {
  if (ref.empty()) throw_data("cer: empty reference");
  return static_cast<double>(edit_distance(hyp, ref)) /
         static_cast<double>(ref.size());
}

double cer_retention(double cer_baseline, double cer_compressed) {
  if (cer_baseline < 0 || cer_compressed < 0)
    throw_data("cer_retention: negative CER");
  if (cer_compressed == 0.0) {
    if (cer_baseline == 0.0) return 1.0;
    throw_data("cer_retention: zero compressed CER with nonzero baseline");
  }
  return cer_baseline / cer_compressed;
}

double speedup_ratio(double t_original, double t_accelerated) {
  if (t_original <= 0.0 || t_accelerated <= 0.0)
    throw_data("speedup_ratio: times must be strictly positive");
  return t_original / t_accelerated;
}

void CostModel::validate() const {
  if (quad < 0 || lin < 0 || konst < 0)
    throw_usage("cost model coefficients must be non-negative");
  if (quad == 0 && lin == 0 && konst == 0)
    throw_usage("cost model needs at least one positive coefficient");
}

std::size_t compressed_length(std::size_t length, double kept_fraction) {
  if (length < 1) throw_usage("compressed_length: length must be >= 1");
  if (kept_fraction <= 0.0 || kept_fraction > 1.0)
    throw_usage("compressed_length: kept fraction must be in (0, 1]");
  auto rounded = static_cast<std::size_t>(
      std::llround(kept_fraction * static_cast<double>(length)));
  return std::max<std::size_t>(1, rounded);
}

double predicted_sr(const CostModel& model, std::size_t length, double kept_fraction) {
  model.validate();
  return model.cost(length) / model.cost(compressed_length(length, kept_fraction));
}

}  // namespace asrkit
