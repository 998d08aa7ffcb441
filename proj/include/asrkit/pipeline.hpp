// SPDX-License-Identifier: Apache-2.0
#ifndef ASRKIT_PIPELINE_HPP
#define ASRKIT_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asrkit/compress.hpp"
#include "asrkit/metrics.hpp"

namespace asrkit::pipeline {

using Json = nlohmann::json;

// Executes one CLI subcommand from its parameter record. Every command
// persists `resolved_config.json` (command name plus all effective
// parameters) into its output directory; re-running from that record
// reproduces all non-timing outputs byte-identically.
void run_command(const std::string& name, const Json& params);

void cmd_gen(const Json& params);
void cmd_prune(const Json& params);
void cmd_refine(const Json& params);
void cmd_sweep(const Json& params);
void cmd_eval(const Json& params);
void cmd_bench(const Json& params);
void cmd_report(const Json& params);

// Mock decoder: spins through cost-model-proportional work
// (quad*L^2 + lin*L + const units) so speedup ratios are measurable.
void mock_decode(const CostModel& model, std::size_t length);
double time_mock_decode(const CostModel& model, std::size_t length);

struct BenchRow {
  double kept_fraction;
  std::size_t length;
  std::size_t compressed_length;
  int reps;
  double t_original;     // median seconds
  double t_accelerated;  // median seconds
  double t_accelerated_min;
  double t_accelerated_max;
  double sr_measured;
  double sr_predicted;
};

std::vector<BenchRow> run_bench(const CostModel& model, std::size_t length,
                                const std::vector<double>& kept_fractions, int reps);
std::string bench_csv(const std::vector<BenchRow>& rows);

// Dual-series line chart (measured SR and CER retention against theta),
// rendered as a standalone SVG with exactly two polylines.
std::string render_sweep_svg(std::vector<SweepRow> rows);

PrunePolicy parse_policy(const std::string& name);

}  // namespace asrkit::pipeline

#endif  // ASRKIT_PIPELINE_HPP
