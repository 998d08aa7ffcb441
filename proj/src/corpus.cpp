// SPDX-License-Identifier: Apache-2.0
#include "asrkit/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace asrkit {

namespace {

constexpr char kMagic[4] = {'E', 'F', 'E', 'A'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_features(const FeatureSequence& seq, const std::filesystem::path& path) {
  if (seq.dim == 0) throw_data("write_features: dim must be positive");
  if (!seq.valid()) throw_data("write_features: invalid sequence");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw_data("write_features: cannot open " + path.string());
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(seq.count()));
  put_u32(os, static_cast<std::uint32_t>(seq.dim));
  for (float v : seq.data) {
    static_assert(std::endian::native == std::endian::little,
                  "feature payload is little-endian");
    os.write(reinterpret_cast<const char*>(&v), 4);
  }
  if (!os) throw_data("write_features: I/O failure writing " + path.string());
}

FeatureSequence read_features(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_data("read_features: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw_data("read_features: bad magic in " + path.string());
  std::uint32_t version = get_u32(is);
  if (!is) throw_data("read_features: truncated header in " + path.string());
  if (version != kVersion)
    throw_data("read_features: unsupported version " + std::to_string(version) +
               " in " + path.string());
  std::uint32_t count = get_u32(is);
  std::uint32_t dim = get_u32(is);
  if (!is) throw_data("read_features: truncated header in " + path.string());
  if (dim == 0) throw_data("read_features: zero dim in " + path.string());
  FeatureSequence seq(dim);
  seq.data.resize(static_cast<std::size_t>(count) * dim);
  if (!seq.data.empty()) {
    is.read(reinterpret_cast<char*>(seq.data.data()),
            static_cast<std::streamsize>(seq.data.size() * 4));
    if (is.gcount() != static_cast<std::streamsize>(seq.data.size() * 4))
      throw_data("read_features: truncated payload in " + path.string());
  }
  return seq;
}

namespace {

using Json = nlohmann::json;

Utterance utterance_from_json(const Json& j) {
  static const std::set<std::string> kKnown = {
      "id", "features", "weak_label", "anchor_label",
      "precise", "ground_truth", "frame_classes"};
  for (const auto& [key, _] : j.items())
    if (!kKnown.count(key)) throw_data("unknown manifest field \"" + key + "\"");
  Utterance u;
  u.id = j.at("id").get<std::string>();
  if (u.id.empty()) throw_data("empty utterance id");
  u.features = j.at("features").get<std::string>();
  u.weak_label = j.at("weak_label").get<std::string>();
  if (j.contains("anchor_label")) u.anchor_label = j["anchor_label"].get<std::string>();
  if (j.contains("precise")) u.precise = j["precise"].get<bool>();
  if (j.contains("ground_truth")) u.ground_truth = j["ground_truth"].get<std::string>();
  if (j.contains("frame_classes")) u.frame_classes = j["frame_classes"].get<std::string>();
  return u;
}

}  // namespace

std::string manifest_line(const Utterance& u) {
  Json j;
  j["id"] = u.id;
  j["features"] = u.features;
  j["weak_label"] = u.weak_label;
  if (u.anchor_label) j["anchor_label"] = *u.anchor_label;
  j["precise"] = u.precise;
  if (u.ground_truth) j["ground_truth"] = *u.ground_truth;
  if (u.frame_classes) j["frame_classes"] = *u.frame_classes;
  return j.dump();
}

std::vector<Utterance> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw_data("read_manifest: cannot open " + path.string());
  std::vector<Utterance> utts;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Utterance u;
    try {
      Json j = Json::parse(line);
      if (!j.is_object()) throw_data("record is not an object");
      u = utterance_from_json(j);
    } catch (const Json::exception& e) {
      throw_data(path.string() + ":" + std::to_string(lineno) +
                 ": malformed manifest line: " + e.what());
    } catch (const Error& e) {
      throw_data(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!seen.insert(u.id).second)
      throw_data(path.string() + ":" + std::to_string(lineno) +
                 ": duplicate utterance id \"" + u.id + "\"");
    utts.push_back(std::move(u));
  }
  return utts;
}

void write_manifest(const std::vector<Utterance>& utts, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw_data("write_manifest: cannot open " + path.string());
  for (const auto& u : utts) os << manifest_line(u) << '\n';
  if (!os) throw_data("write_manifest: I/O failure writing " + path.string());
}

std::vector<int> read_frame_classes(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw_data("read_frame_classes: cannot open " + path.string());
  std::vector<int> classes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      classes.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw_data(path.string() + ":" + std::to_string(lineno) +
                 ": malformed class index \"" + line + "\"");
    }
  }
  return classes;
}

void write_frame_classes(const std::vector<int>& classes, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw_data("write_frame_classes: cannot open " + path.string());
  for (int c : classes) os << c << '\n';
}

std::filesystem::path resolve_ref(const std::filesystem::path& manifest_path,
                                  const std::string& ref) {
  std::filesystem::path p(ref);
  if (p.is_absolute()) return p;
  return manifest_path.parent_path() / p;
}

void SynthSpec::validate() const {
  if (alphabet_size < 2 || alphabet_size > 26)
    throw_usage("alphabet_size must be in [2, 26]");
  if (dim < 2) throw_usage("dim must be >= 2");
  if (utterances < 1) throw_usage("utterances must be >= 1");
  auto check_range = [](IntRange r, int min_lo, const char* name) {
    if (r.lo > r.hi || r.lo < min_lo)
      throw_usage(std::string(name) + " range is empty or below " +
                  std::to_string(min_lo));
  };
  check_range(tokens_per_utterance, 1, "tokens_per_utterance");
  check_range(frames_per_token, 1, "frames_per_token");
  check_range(blank_frames_between_tokens, 0, "blank_frames_between_tokens");
  if (noise_sigma < 0) throw_usage("noise_sigma must be non-negative");
  if (centroid_similarity_lo > centroid_similarity_hi ||
      centroid_similarity_lo < -1.0 || centroid_similarity_hi > 1.0)
    throw_usage("centroid similarity band must satisfy -1 <= lo <= hi <= 1");
  if (weak_label_error_rate < 0 || weak_label_error_rate > 1 ||
      anchor_error_rate < 0 || anchor_error_rate > 1)
    throw_usage("error rates must be probabilities in [0, 1]");
}

std::string alphabet_for(int alphabet_size) {
  std::string a;
  for (int i = 0; i < alphabet_size; ++i) a.push_back(static_cast<char>('a' + i));
  return a;
}

std::string corrupt_label(const std::string& label, double rate,
                          const std::string& alphabet, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string out;
  out.reserve(label.size() + 4);
  for (char c : label) {
    double u = u01(rng);
    if (u < rate / 3.0) {
      // substitute with a different symbol
      char s = c;
      while (s == c) s = alphabet[pick(rng)];
      out.push_back(s);
    } else if (u < 2.0 * rate / 3.0) {
      // delete
    } else if (u < rate) {
      out.push_back(c);
      out.push_back(alphabet[pick(rng)]);  // insert after
    } else {
      out.push_back(c);
    }
  }
  return out;
}

namespace {

std::vector<float> random_unit_vector(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<float> v(static_cast<std::size_t>(dim));
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : v) {
      double g = gauss(rng);
      x = static_cast<float>(g);
      norm2 += g * g;
    }
  } while (norm2 < 1e-12);
  double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x = static_cast<float>(x * inv);
  return v;
}

double dot(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

// K class centroids plus one blank centroid, unit length, pairwise cosine
// similarity inside [lo, hi]. Rejection sampling with a bounded attempt count.
std::vector<std::vector<float>> sample_centroids(const SynthSpec& spec,
                                                 std::mt19937_64& rng) {
  const int total = spec.alphabet_size + 1;
  const int max_attempts = 20000 * total;
  std::vector<std::vector<float>> centroids;
  int attempts = 0;
  while (static_cast<int>(centroids.size()) < total) {
    if (++attempts > max_attempts)
      throw_data("generate_corpus: centroid similarity band [" +
                 std::to_string(spec.centroid_similarity_lo) + ", " +
                 std::to_string(spec.centroid_similarity_hi) +
                 "] infeasible for K=" + std::to_string(spec.alphabet_size) +
                 ", D=" + std::to_string(spec.dim));
    auto cand = random_unit_vector(spec.dim, rng);
    bool ok = true;
    for (const auto& c : centroids) {
      double s = dot(cand, c);
      if (s < spec.centroid_similarity_lo || s > spec.centroid_similarity_hi) {
        ok = false;
        break;
      }
    }
    if (ok) centroids.push_back(std::move(cand));
  }
  return centroids;
}

std::string utt_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%05d", index);
  return buf;
}

}  // namespace

std::filesystem::path generate_corpus(const SynthSpec& spec,
                                      const std::filesystem::path& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "features");
  fs::create_directories(out_dir / "classes");

  std::mt19937_64 rng(spec.seed);
  const std::string alphabet = alphabet_for(spec.alphabet_size);
  auto centroids = sample_centroids(spec, rng);
  const auto& blank = centroids.back();

  FeatureSequence centroid_file(static_cast<std::size_t>(spec.dim));
  for (const auto& c : centroids) centroid_file.push_frame(c);
  write_features(centroid_file, out_dir / "centroids.fea");

  std::uniform_int_distribution<int> n_tokens(spec.tokens_per_utterance.lo,
                                              spec.tokens_per_utterance.hi);
  std::uniform_int_distribution<int> n_frames(spec.frames_per_token.lo,
                                              spec.frames_per_token.hi);
  std::uniform_int_distribution<int> n_blanks(spec.blank_frames_between_tokens.lo,
                                              spec.blank_frames_between_tokens.hi);
  std::uniform_int_distribution<int> pick_class(0, spec.alphabet_size - 1);
  std::normal_distribution<double> noise(0.0, 1.0);

  auto emit_frames = [&](FeatureSequence& seq, std::vector<int>& classes,
                         const std::vector<float>& centroid, int cls, int n) {
    for (int f = 0; f < n; ++f) {
      std::vector<float> frame(centroid);
      if (spec.noise_sigma > 0)
        for (auto& v : frame)
          v = static_cast<float>(v + spec.noise_sigma * noise(rng));
      seq.push_frame(frame);
      classes.push_back(cls);
    }
  };

  std::vector<Utterance> utts;
  utts.reserve(static_cast<std::size_t>(spec.utterances));
  for (int i = 0; i < spec.utterances; ++i) {
    Utterance u;
    u.id = utt_id(i);
    u.features = "features/" + u.id + ".fea";
    u.frame_classes = "classes/" + u.id + ".cls";

    const int tokens = n_tokens(rng);
    std::string truth;
    FeatureSequence seq(static_cast<std::size_t>(spec.dim));
    std::vector<int> classes;
    for (int t = 0; t < tokens; ++t) {
      if (t > 0) emit_frames(seq, classes, blank, -1, n_blanks(rng));
      int cls = pick_class(rng);
      truth.push_back(alphabet[static_cast<std::size_t>(cls)]);
      emit_frames(seq, classes, centroids[static_cast<std::size_t>(cls)], cls,
                  n_frames(rng));
    }
    u.ground_truth = truth;
    u.weak_label = corrupt_label(truth, spec.weak_label_error_rate, alphabet, rng);
    u.anchor_label = corrupt_label(truth, spec.anchor_error_rate, alphabet, rng);

    write_features(seq, out_dir / u.features);
    write_frame_classes(classes, out_dir / *u.frame_classes);
    utts.push_back(std::move(u));
  }

  fs::path manifest = out_dir / "manifest.jsonl";
  write_manifest(utts, manifest);
  return manifest;
}

}  // namespace asrkit
