// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "asrkit/compress.hpp"
#include "asrkit/corpus.hpp"
#include "test_util.hpp"

using namespace asrkit;
using testutil::TempDir;
using testutil::file_bytes;

TEST_CASE("feature file round trips") {
  TempDir dir;

  SUBCASE("empty sequence is header only") {
    FeatureSequence seq(4);
    write_features(seq, dir / "empty.fea");
    CHECK(std::filesystem::file_size(dir / "empty.fea") == 16);
    auto back = read_features(dir / "empty.fea");
    CHECK(back.count() == 0);
    CHECK(back.dim == 4);
  }

  SUBCASE("two frames of dim three, bit exact") {
    FeatureSequence seq(3);
    seq.data = {1.0f, -2.5f, 3.25f, 0.0f, 1e-8f, -7.0f};
    write_features(seq, dir / "a.fea");
    CHECK(std::filesystem::file_size(dir / "a.fea") == 16 + 24);
    auto back = read_features(dir / "a.fea");
    CHECK(back == seq);
    write_features(back, dir / "b.fea");
    CHECK(file_bytes(dir / "a.fea") == file_bytes(dir / "b.fea"));
  }

  SUBCASE("seeded random sequences round trip exactly") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 200; ++i) {
      auto seq = testutil::random_sequence(rng, 100, 64);
      write_features(seq, dir / "r.fea");
      CHECK(read_features(dir / "r.fea") == seq);
    }
  }

  SUBCASE("zero dim rejected") {
    FeatureSequence seq;
    CHECK_THROWS_WITH_AS(write_features(seq, dir / "bad.fea"),
                         doctest::Contains("dim"), Error);
  }
}

TEST_CASE("feature file error cases are reported distinctly") {
  TempDir dir;
  FeatureSequence seq(2);
  seq.data = {1.0f, 2.0f, 3.0f, 4.0f};
  write_features(seq, dir / "good.fea");
  auto bytes = file_bytes(dir / "good.fea");

  auto write_raw = [&](const std::string& name, const std::string& content) {
    std::ofstream os(dir / name, std::ios::binary);
    os << content;
  };

  SUBCASE("bad magic") {
    auto bad = bytes;
    bad[0] = 'X';
    write_raw("magic.fea", bad);
    CHECK_THROWS_WITH_AS(read_features(dir / "magic.fea"),
                         doctest::Contains("bad magic"), Error);
  }
  SUBCASE("version mismatch") {
    auto bad = bytes;
    bad[4] = 2;
    write_raw("ver.fea", bad);
    CHECK_THROWS_WITH_AS(read_features(dir / "ver.fea"),
                         doctest::Contains("version"), Error);
  }
  SUBCASE("payload four bytes short") {
    write_raw("trunc.fea", bytes.substr(0, bytes.size() - 4));
    CHECK_THROWS_WITH_AS(read_features(dir / "trunc.fea"),
                         doctest::Contains("truncated"), Error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_features(dir / "nope.fea"), Error);
  }
}

TEST_CASE("manifest round trips and rejects bad records") {
  TempDir dir;

  SUBCASE("empty file gives empty list") {
    std::ofstream(dir / "m").close();
    CHECK(read_manifest(dir / "m").empty());
  }

  SUBCASE("records round trip in order, parse-serialize-parse fixed point") {
    std::vector<Utterance> utts(3);
    utts[0] = {"u2", "f2.fea", "abc", "abd", false, "abc", std::nullopt};
    utts[1] = {"u1", "f1.fea", "zz", std::nullopt, true, std::nullopt, "c1.cls"};
    utts[2] = {"u3", "f3.fea", "", "q", false, std::nullopt, std::nullopt};
    write_manifest(utts, dir / "m");
    auto back = read_manifest(dir / "m");
    CHECK(back == utts);
    write_manifest(back, dir / "m2");
    CHECK(file_bytes(dir / "m") == file_bytes(dir / "m2"));
  }

  SUBCASE("duplicate id names the line") {
    std::ofstream os(dir / "m");
    os << R"({"id":"u1","features":"a","weak_label":"x"})" << '\n';
    os << R"({"id":"u1","features":"b","weak_label":"y"})" << '\n';
    os.close();
    CHECK_THROWS_WITH_AS(read_manifest(dir / "m"), doctest::Contains(":2:"), Error);
  }

  SUBCASE("malformed line reports its number") {
    std::ofstream os(dir / "m");
    os << R"({"id":"u1","features":"a","weak_label":"x"})" << '\n';
    os << "not json" << '\n';
    os.close();
    try {
      read_manifest(dir / "m");
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
      CHECK(e.kind() == ErrorKind::kData);
    }
  }

  SUBCASE("unknown fields rejected") {
    std::ofstream os(dir / "m");
    os << R"({"id":"u1","features":"a","weak_label":"x","wav":"y"})" << '\n';
    os.close();
    CHECK_THROWS_WITH_AS(read_manifest(dir / "m"),
                         doctest::Contains("unknown manifest field"), Error);
  }
}

TEST_CASE("frame-class sidecar io") {
  TempDir dir;
  std::vector<int> classes = {0, 0, -1, 2, 2, 1};
  write_frame_classes(classes, dir / "x.cls");
  CHECK(read_frame_classes(dir / "x.cls") == classes);
}

TEST_CASE("synthetic corpus generator") {
  SynthSpec spec;
  spec.alphabet_size = 5;
  spec.dim = 8;
  spec.utterances = 12;
  spec.noise_sigma = 0.0;
  spec.seed = 1234;

  SUBCASE("zero weak error rate means weak equals truth") {
    TempDir dir;
    auto manifest = generate_corpus(spec, dir.path);
    for (const auto& u : read_manifest(manifest)) {
      REQUIRE(u.ground_truth.has_value());
      CHECK(u.weak_label == *u.ground_truth);
      CHECK(u.anchor_label == *u.ground_truth);
    }
  }

  SUBCASE("same spec and seed give byte-identical output") {
    TempDir a, b;
    auto ma = generate_corpus(spec, a.path);
    auto mb = generate_corpus(spec, b.path);
    CHECK(file_bytes(ma) == file_bytes(mb));
    CHECK(file_bytes(a / "centroids.fea") == file_bytes(b / "centroids.fea"));
    for (const auto& u : read_manifest(ma)) {
      CHECK(file_bytes(resolve_ref(ma, u.features)) ==
            file_bytes(resolve_ref(mb, u.features)));
      CHECK(file_bytes(resolve_ref(ma, *u.frame_classes)) ==
            file_bytes(resolve_ref(mb, *u.frame_classes)));
    }
  }

  SUBCASE("noise-free frames equal their class centroid exactly") {
    TempDir dir;
    spec.frames_per_token = {3, 3};
    auto manifest = generate_corpus(spec, dir.path);
    auto centroids = read_features(dir / "centroids.fea");
    REQUIRE(centroids.count() == 6);  // K classes + blank
    for (const auto& u : read_manifest(manifest)) {
      auto seq = read_features(resolve_ref(manifest, u.features));
      auto classes = read_frame_classes(resolve_ref(manifest, *u.frame_classes));
      REQUIRE(classes.size() == seq.count());
      for (std::size_t t = 0; t < seq.count(); ++t) {
        std::size_t slot = classes[t] < 0 ? 5 : static_cast<std::size_t>(classes[t]);
        auto want = centroids.frame(slot);
        auto got = seq.frame(t);
        CHECK(std::equal(want.begin(), want.end(), got.begin()));
        // Within a token, adjacent identical frames have similarity 1.0.
        if (t > 0 && classes[t] == classes[t - 1])
          CHECK(cosine_sim(seq.frame(t - 1), seq.frame(t)) ==
                doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }

  SUBCASE("centroid similarities lie in the requested band") {
    TempDir dir;
    spec.centroid_similarity_lo = 0.1;
    spec.centroid_similarity_hi = 0.6;
    generate_corpus(spec, dir.path);
    auto centroids = read_features(dir / "centroids.fea");
    for (std::size_t i = 0; i < centroids.count(); ++i)
      for (std::size_t j = i + 1; j < centroids.count(); ++j) {
        double s = cosine_sim(centroids.frame(i), centroids.frame(j));
        CHECK(s >= 0.1 - 1e-6);
        CHECK(s <= 0.6 + 1e-6);
      }
  }

  SUBCASE("infeasible band fails with a bounded-attempts error") {
    TempDir dir;
    spec.centroid_similarity_lo = 0.999;
    spec.centroid_similarity_hi = 1.0;
    CHECK_THROWS_WITH_AS(generate_corpus(spec, dir.path),
                         doctest::Contains("infeasible"), Error);
  }

  SUBCASE("invalid specs rejected") {
    SynthSpec bad = spec;
    bad.weak_label_error_rate = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = spec;
    bad.tokens_per_utterance = {5, 2};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = spec;
    bad.alphabet_size = 1;
    CHECK_THROWS_AS(bad.validate(), Error);
  }
}

TEST_CASE("corrupt_label hits all three edit operations") {
  std::mt19937_64 rng(5);
  std::string alphabet = "abcd";
  bool saw_shorter = false, saw_longer = false, saw_sub = false;
  for (int i = 0; i < 500; ++i) {
    std::string label = "aabbccdd";
    auto out = corrupt_label(label, 0.5, alphabet, rng);
    if (out.size() < label.size()) saw_shorter = true;
    if (out.size() > label.size()) saw_longer = true;
    if (out.size() == label.size() && out != label) saw_sub = true;
  }
  CHECK(saw_shorter);
  CHECK(saw_longer);
  CHECK(saw_sub);
  // rate 0 is the identity
  CHECK(corrupt_label("abcd", 0.0, alphabet, rng) == "abcd");
}
