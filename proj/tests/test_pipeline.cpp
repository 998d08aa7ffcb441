// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "asrkit/corpus.hpp"
#include "asrkit/pipeline.hpp"
#include "asrkit/toyasr.hpp"
#include "test_util.hpp"

using namespace asrkit;
using pipeline::Json;
using testutil::TempDir;
using testutil::file_bytes;

namespace {

Json gen_params(const std::filesystem::path& out, std::uint64_t seed = 11) {
  Json p;
  p["out"] = out.string();
  p["alphabet_size"] = 4;
  p["dim"] = 8;
  p["utterances"] = 12;
  p["seed"] = seed;
  p["weak_error_rate"] = 0.2;
  p["anchor_error_rate"] = 0.05;
  return p;
}

std::size_t count_needle(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + 1))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("gen writes the corpus and a replayable resolved config") {
  TempDir a;
  pipeline::run_command("gen", gen_params(a / "c"));
  CHECK(std::filesystem::exists(a / "c" / "manifest.jsonl"));
  CHECK(std::filesystem::exists(a / "c" / "centroids.fea"));
  REQUIRE(std::filesystem::exists(a / "c" / "resolved_config.json"));

  // Replaying the resolved config into a fresh directory reproduces the
  // corpus byte for byte.
  Json resolved;
  std::ifstream(a / "c" / "resolved_config.json") >> resolved;
  CHECK(resolved.at("command") == "gen");
  Json replay = resolved.at("params");
  TempDir b;
  replay["out"] = (b / "c").string();
  pipeline::run_command("gen", replay);

  CHECK(file_bytes(a / "c" / "manifest.jsonl") == file_bytes(b / "c" / "manifest.jsonl"));
  auto utts = read_manifest(a / "c" / "manifest.jsonl");
  REQUIRE(utts.size() == 12);
  for (const auto& u : utts)
    CHECK(file_bytes(resolve_ref(a / "c" / "manifest.jsonl", u.features)) ==
          file_bytes(resolve_ref(b / "c" / "manifest.jsonl", u.features)));
}

TEST_CASE("prune command output is worker-count independent") {
  TempDir dir;
  pipeline::run_command("gen", gen_params(dir / "c"));

  auto run = [&](const std::filesystem::path& out, int workers) {
    Json p;
    p["manifest"] = (dir / "c" / "manifest.jsonl").string();
    p["out"] = out.string();
    p["theta"] = 0.9;
    p["workers"] = workers;
    pipeline::run_command("prune", p);
  };
  run(dir / "p1", 1);
  run(dir / "p4", 4);

  CHECK(file_bytes(dir / "p1" / "manifest.jsonl") ==
        file_bytes(dir / "p4" / "manifest.jsonl"));
  CHECK(file_bytes(dir / "p1" / "prune_results.jsonl") ==
        file_bytes(dir / "p4" / "prune_results.jsonl"));

  auto pruned = read_manifest(dir / "p1" / "manifest.jsonl");
  auto orig = read_manifest(dir / "c" / "manifest.jsonl");
  REQUIRE(pruned.size() == orig.size());
  for (std::size_t i = 0; i < pruned.size(); ++i) {
    auto pseq = read_features(resolve_ref(dir / "p1" / "manifest.jsonl", pruned[i].features));
    auto oseq = read_features(resolve_ref(dir / "c" / "manifest.jsonl", orig[i].features));
    CHECK(pseq.count() <= oseq.count());
    // Sidecars stay aligned with the surviving frames.
    REQUIRE(pruned[i].frame_classes.has_value());
    auto classes = read_frame_classes(
        resolve_ref(dir / "p1" / "manifest.jsonl", *pruned[i].frame_classes));
    CHECK(classes.size() == pseq.count());
  }

  SUBCASE("theta is mandatory") {
    Json p;
    p["manifest"] = (dir / "c" / "manifest.jsonl").string();
    p["out"] = (dir / "px").string();
    CHECK_THROWS_AS(pipeline::run_command("prune", p), Error);
  }
}

TEST_CASE("refine command trains, loops and saves artifacts") {
  TempDir dir;
  pipeline::run_command("gen", gen_params(dir / "c"));

  Json p;
  p["manifest"] = (dir / "c" / "manifest.jsonl").string();
  p["out"] = (dir / "r").string();
  p["tau"] = 10.0;
  p["iters"] = 2;
  pipeline::run_command("refine", p);

  CHECK(std::filesystem::exists(dir / "r" / "init_model.json"));
  CHECK(std::filesystem::exists(dir / "r" / "model.json"));
  CHECK(std::filesystem::exists(dir / "r" / "stats"));
  for (int k = 0; k <= 2; ++k)
    CHECK(std::filesystem::exists(dir / "r" / ("iter_" + std::to_string(k)) / "manifest"));

  // The final model loads back and the alphabet was inferred from sidecars.
  auto model = CentroidModel::load(dir / "r" / "model.json");
  CHECK(model.alphabet() == "abcd");

  Json resolved;
  std::ifstream(dir / "r" / "resolved_config.json") >> resolved;
  CHECK(resolved.at("params").at("alphabet_size") == 4);
  CHECK(resolved.at("params").at("bypass_precise") == true);
}

TEST_CASE("sweep command emits the canonical CSV") {
  TempDir dir;
  pipeline::run_command("gen", gen_params(dir / "c"));

  Json p;
  p["manifest"] = (dir / "c" / "manifest.jsonl").string();
  p["out"] = (dir / "s").string();
  p["thetas"] = std::vector<double>{0.7, 1.0, 0.9};  // unsorted on purpose
  p["reps"] = 3;
  p["cost_quad"] = 1e-3;
  pipeline::run_command("sweep", p);

  auto rows = parse_sweep_csv(dir / "s" / "sweep.csv");
  REQUIRE(rows.size() == 3);
  // Rows come out in descending theta order regardless of input order.
  CHECK(rows[0].theta == 1.0);
  CHECK(rows[1].theta == 0.9);
  CHECK(rows[2].theta == 0.7);
  CHECK(rows[0].kept_fraction == doctest::Approx(1.0));
  CHECK(rows[0].cer_retention == doctest::Approx(1.0));
  CHECK(rows[0].sr_predicted == doctest::Approx(1.0));
  for (const auto& r : rows) {
    CHECK(r.kept_fraction > 0.0);
    CHECK(r.kept_fraction <= 1.0);
    CHECK(r.sr_predicted >= 1.0);
  }

  std::ifstream is(dir / "s" / "sweep.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "theta,kept_fraction,cer,cer_retention,sr_measured,sr_predicted");

  SUBCASE("empty theta list is a usage error") {
    p["thetas"] = std::vector<double>{};
    p["out"] = (dir / "s2").string();
    CHECK_THROWS_AS(pipeline::run_command("sweep", p), Error);
  }
}

TEST_CASE("eval command scores weak labels or a model") {
  TempDir dir;
  pipeline::run_command("gen", gen_params(dir / "c"));

  Json p;
  p["manifest"] = (dir / "c" / "manifest.jsonl").string();
  p["out"] = (dir / "e_weak").string();
  pipeline::run_command("eval", p);

  auto read_overall = [](const std::filesystem::path& csv) {
    std::ifstream is(csv);
    std::string line, last;
    std::getline(is, line);
    CHECK(line == "id,ref_length,edit_distance,cer");
    while (std::getline(is, line))
      if (!line.empty()) last = line;
    REQUIRE(last.rfind("__overall__,", 0) == 0);
    return std::stod(last.substr(last.rfind(',') + 1));
  };

  // Weak labels were corrupted at rate 0.2, so their CER is nonzero.
  double weak_cer = read_overall(dir / "e_weak" / "eval.csv");
  CHECK(weak_cer > 0.0);

  // A sidecar-trained model on this low-noise corpus beats the weak labels.
  Json pr;
  pr["manifest"] = (dir / "c" / "manifest.jsonl").string();
  pr["out"] = (dir / "r").string();
  pr["iters"] = 1;
  pipeline::run_command("refine", pr);
  p["out"] = (dir / "e_model").string();
  p["model"] = (dir / "r" / "model.json").string();
  pipeline::run_command("eval", p);
  double model_cer = read_overall(dir / "e_model" / "eval.csv");
  CHECK(model_cer < weak_cer);

  SUBCASE("theta applies pruning before decoding") {
    p["out"] = (dir / "e_pruned").string();
    p["theta"] = 0.95;
    pipeline::run_command("eval", p);
    CHECK(std::filesystem::exists(dir / "e_pruned" / "eval.csv"));
  }
}

TEST_CASE("bench command writes one row per kept fraction") {
  TempDir dir;
  Json p;
  p["out"] = (dir / "b").string();
  p["length"] = 400;
  p["reps"] = 3;
  p["kept"] = std::vector<double>{0.5, 1.0};
  p["cost_quad"] = 1e-3;
  pipeline::run_command("bench", p);

  std::ifstream is(dir / "b" / "bench.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "kept_fraction,length,compressed_length,reps,t_original,t_accelerated,"
        "t_accelerated_min,t_accelerated_max,sr_measured,sr_predicted");
  int rows = 0;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);

  SUBCASE("fewer than three reps is a usage error") {
    p["reps"] = 2;
    try {
      pipeline::run_command("bench", p);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUsage);
    }
  }
}

TEST_CASE("report renders exactly two polylines") {
  TempDir dir;
  std::vector<SweepRow> rows = {
      {1.0, 1.0, 0.1, 1.0, 1.0, 1.0},
      {0.8, 0.6, 0.11, 0.909091, 2.5, 2.78},
      {0.6, 0.3, 0.2, 0.5, 8.1, 11.1},
  };
  {
    std::ofstream os(dir / "sweep.csv");
    os << sweep_csv(rows);
  }
  Json p;
  p["in"] = (dir / "sweep.csv").string();
  p["out"] = (dir / "rep").string();
  pipeline::run_command("report", p);

  auto svg = file_bytes(dir / "rep" / "report.svg");
  CHECK(count_needle(svg, "<polyline") == 2);
  CHECK(count_needle(svg, "<svg") == 1);
  CHECK(svg.find("0.6") != std::string::npos);  // theta axis endpoints
  CHECK(svg.find("1") != std::string::npos);
  CHECK(svg.find("#cc3333") != std::string::npos);
  CHECK(svg.find("#3355cc") != std::string::npos);

  SUBCASE("single-row sweep still renders") {
    std::ofstream os(dir / "one.csv");
    os << sweep_csv({rows[0]});
    os.close();
    p["in"] = (dir / "one.csv").string();
    p["out"] = (dir / "rep1").string();
    pipeline::run_command("report", p);
    CHECK(count_needle(file_bytes(dir / "rep1" / "report.svg"), "<polyline") == 2);
  }
}

TEST_CASE("unknown commands and malformed parameters are usage errors") {
  try {
    pipeline::run_command("frobnicate", Json::object());
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUsage);
  }
  try {
    pipeline::run_command("gen", Json::array());
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUsage);
  }
  try {
    pipeline::run_command("gen", Json::object());  // missing "out"
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUsage);
    CHECK(std::string(e.what()).find("out") != std::string::npos);
  }
}
