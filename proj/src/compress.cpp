// SPDX-License-Identifier: Apache-2.0
#include "asrkit/compress.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "asrkit/corpus.hpp"
#include "parallel_for.hpp"

namespace asrkit {

void PruneConfig::validate() const {
  if (theta < -1.0 || theta > 1.0) throw_usage("theta must be in [-1, 1]");
  if (zero_norm_epsilon <= 0.0) throw_usage("zero_norm_epsilon must be positive");
}

double cosine_sim(std::span<const float> x, std::span<const float> y, double epsilon) {
  if (x.size() != y.size())
    throw_data("cosine_sim: dimension mismatch (" + std::to_string(x.size()) +
               " vs " + std::to_string(y.size()) + ")");
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += static_cast<double>(x[i]) * y[i];
    nx += static_cast<double>(x[i]) * x[i];
    ny += static_cast<double>(y[i]) * y[i];
  }
  nx = std::sqrt(nx);
  ny = std::sqrt(ny);
  if (nx < epsilon || ny < epsilon) return 0.0;  // never-redundant frame
  return dot / (nx * ny);
}

PruneResult prune_indices(const FeatureSequence& seq, const PruneConfig& cfg) {
  cfg.validate();
  PruneResult result;
  result.original_count = seq.count();
  if (result.original_count == 0) {
    result.kept_fraction = 1.0;  // vacuous no-op
    return result;
  }
  result.kept_indices.push_back(0);
  std::size_t anchor = 0;  // last kept index, used by kLastKept
  for (std::size_t j = 1; j < result.original_count; ++j) {
    std::size_t ref = cfg.policy == PrunePolicy::kOriginalAdjacent ? j - 1 : anchor;
    double sim = cosine_sim(seq.frame(ref), seq.frame(j), cfg.zero_norm_epsilon);
    if (!(sim > cfg.theta)) {
      result.kept_indices.push_back(j);
      anchor = j;
    }
  }
  result.kept_fraction = static_cast<double>(result.kept_indices.size()) /
                         static_cast<double>(result.original_count);
  return result;
}

FeatureSequence apply_prune(const FeatureSequence& seq, const PruneResult& result) {
  FeatureSequence out(seq.dim);
  out.data.reserve(result.kept_indices.size() * seq.dim);
  for (std::size_t idx : result.kept_indices) {
    if (idx >= seq.count())
      throw_data("apply_prune: kept index " + std::to_string(idx) +
                 " out of range for " + std::to_string(seq.count()) + " frames");
    out.push_frame(seq.frame(idx));
  }
  return out;
}

namespace {

std::string fmt_sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct ThetaEval {
  double mean_kept = 1.0;
  double cer = 0.0;
  double seconds = 0.0;
  double total_cost = 0.0;  // cost-model units over pruned lengths
};

ThetaEval evaluate_theta(double theta, const std::vector<Utterance>& utts,
                         const std::vector<FeatureSequence>& features,
                         const PruneConfig& base_cfg, const CostModel& cost,
                         const SweepEvaluator& evaluator, int workers) {
  PruneConfig cfg = base_cfg;
  cfg.theta = theta;
  std::vector<SweepItem> items(utts.size());
  parallel_for(utts.size(), workers, [&](std::size_t i) {
    items[i].utterance = &utts[i];
    items[i].full = &features[i];
    items[i].prune = prune_indices(features[i], cfg);
    items[i].pruned = apply_prune(features[i], items[i].prune);
  });
  ThetaEval eval;
  double kept_sum = 0.0;
  for (const auto& item : items) {
    kept_sum += item.prune.kept_fraction;
    eval.total_cost += cost.cost(item.pruned.count());
  }
  eval.mean_kept = items.empty() ? 1.0 : kept_sum / static_cast<double>(items.size());
  SweepEval e = evaluator(theta, items);
  eval.cer = e.cer;
  eval.seconds = e.seconds;
  return eval;
}

}  // namespace

std::vector<SweepRow> sweep(const std::filesystem::path& manifest_path,
                            const std::vector<double>& thresholds,
                            const PruneConfig& base_cfg, const CostModel& cost,
                            const SweepEvaluator& evaluator, int workers) {
  cost.validate();
  auto utts = read_manifest(manifest_path);
  std::sort(utts.begin(), utts.end(),
            [](const Utterance& a, const Utterance& b) { return a.id < b.id; });
  std::vector<FeatureSequence> features(utts.size());
  parallel_for(utts.size(), workers, [&](std::size_t i) {
    features[i] = read_features(resolve_ref(manifest_path, utts[i].features));
  });

  ThetaEval baseline =
      evaluate_theta(1.0, utts, features, base_cfg, cost, evaluator, workers);

  std::vector<SweepRow> rows;
  rows.reserve(thresholds.size());
  for (double theta : thresholds) {
    ThetaEval eval = theta == 1.0
                         ? baseline
                         : evaluate_theta(theta, utts, features, base_cfg, cost,
                                          evaluator, workers);
    SweepRow row;
    row.theta = theta;
    row.kept_fraction = eval.mean_kept;
    row.cer = eval.cer;
    row.cer_retention = (baseline.cer == 0.0 && eval.cer == 0.0)
                            ? 1.0
                            : (eval.cer == 0.0 ? 1.0 : baseline.cer / eval.cer);
    row.sr_measured = eval.seconds > 0.0 ? baseline.seconds / eval.seconds : 1.0;
    row.sr_predicted = eval.total_cost > 0.0 ? baseline.total_cost / eval.total_cost : 1.0;
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "theta,kept_fraction,cer,cer_retention,sr_measured,sr_predicted\n";
  for (const auto& r : rows)
    os << fmt_sig6(r.theta) << ',' << fmt_sig6(r.kept_fraction) << ','
       << fmt_sig6(r.cer) << ',' << fmt_sig6(r.cer_retention) << ','
       << fmt_sig6(r.sr_measured) << ',' << fmt_sig6(r.sr_predicted) << '\n';
  return os.str();
}

std::vector<SweepRow> parse_sweep_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw_data("parse_sweep_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) ||
      line != "theta,kept_fraction,cer,cer_retention,sr_measured,sr_predicted")
    throw_data("parse_sweep_csv: bad header in " + path.string());
  std::vector<SweepRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    SweepRow r;
    char c;
    if (!(ls >> r.theta >> c >> r.kept_fraction >> c >> r.cer >> c >>
          r.cer_retention >> c >> r.sr_measured >> c >> r.sr_predicted))
      throw_data("parse_sweep_csv: malformed row at " + path.string() + ":" +
                 std::to_string(lineno));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace asrkit
