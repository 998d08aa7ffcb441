// SPDX-License-Identifier: Apache-2.0
#include "asrkit/toyasr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "asrkit/corpus.hpp"
#include "asrkit/metrics.hpp"

namespace asrkit {

namespace {

using Json = nlohmann::json;

constexpr double kNormEpsilon = 1e-12;

std::vector<float> recalibrated(const Recalibration& r, std::span<const float> frame) {
  std::vector<float> out(frame.size());
  for (std::size_t d = 0; d < frame.size(); ++d)
    out[d] = r.scale[d] * frame[d] + r.shift[d];
  return out;
}

}  // namespace

CentroidModel::CentroidModel(std::vector<std::vector<float>> class_centroids,
                             std::vector<float> blank_centroid, std::string alphabet)
    : class_centroids_(std::move(class_centroids)),
      blank_centroid_(std::move(blank_centroid)),
      alphabet_(std::move(alphabet)) {
  if (class_centroids_.size() != alphabet_.size())
    throw_usage("CentroidModel: centroid/alphabet size mismatch");
  for (const auto& c : class_centroids_)
    if (c.size() != blank_centroid_.size())
      throw_usage("CentroidModel: inconsistent centroid dimension");
  recal_ = Recalibration::identity(blank_centroid_.size());
}

void CentroidModel::set_recalibration(Recalibration r) {
  if (r.scale.size() != dim() || r.shift.size() != dim())
    throw_usage("set_recalibration: array length must equal dim");
  recal_ = std::move(r);
}

std::vector<int> CentroidModel::classify_frames(const FeatureSequence& seq) const {
  if (seq.dim != dim())
    throw_data("transcribe: dimension mismatch (" + std::to_string(seq.dim) +
               " vs model dim " + std::to_string(dim()) + ")");
  std::vector<int> classes(seq.count());
  for (std::size_t t = 0; t < seq.count(); ++t) {
    auto frame = recalibrated(recal_, seq.frame(t));
    int best = 0;
    double best_sim = cosine_sim(frame, class_centroids_[0], kNormEpsilon);
    for (std::size_t k = 1; k < class_centroids_.size(); ++k) {
      double s = cosine_sim(frame, class_centroids_[k], kNormEpsilon);
      if (s > best_sim) {  // ties keep the lower class index
        best_sim = s;
        best = static_cast<int>(k);
      }
    }
    // blank loses ties against any class
    if (cosine_sim(frame, blank_centroid_, kNormEpsilon) > best_sim) best = -1;
    classes[t] = best;
  }
  return classes;
}

std::string CentroidModel::transcribe(const FeatureSequence& seq) const {
  auto classes = classify_frames(seq);
  std::string out;
  int prev = -2;  // sentinel distinct from any class and from blank
  for (int c : classes) {
    if (c != prev && c >= 0) out.push_back(alphabet_[static_cast<std::size_t>(c)]);
    prev = c;
  }
  return out;
}

std::vector<int> CentroidModel::align(const FeatureSequence& seq,
                                      const std::string& label) const {
  if (seq.dim != dim()) throw_data("align: dimension mismatch");
  const std::size_t n = seq.count();
  if (label.empty()) return std::vector<int>(n, -1);
  if (n < label.size())
    throw_data("align: sequence shorter than label");

  // Blank-interleaved state chain: blank, c0, blank, c1, ..., blank.
  const std::size_t states = 2 * label.size() + 1;
  std::vector<int> state_class(states, -1);
  for (std::size_t i = 0; i < label.size(); ++i) {
    auto pos = alphabet_.find(label[i]);
    if (pos == std::string::npos)
      throw_data("align: label symbol '" + std::string(1, label[i]) +
                 "' outside model alphabet");
    state_class[2 * i + 1] = static_cast<int>(pos);
  }
  auto state_sim = [&](const std::vector<float>& frame, std::size_t s) {
    int c = state_class[s];
    const auto& centroid = c < 0 ? blank_centroid_
                                 : class_centroids_[static_cast<std::size_t>(c)];
    return cosine_sim(frame, centroid, kNormEpsilon);
  };

  constexpr double kNegInf = -1e30;
  std::vector<double> prev(states, kNegInf), cur(states, kNegInf);
  std::vector<std::vector<std::int8_t>> back(n, std::vector<std::int8_t>(states, 0));

  auto frame0 = recalibrated(recal_, seq.frame(0));
  prev[0] = state_sim(frame0, 0);
  prev[1] = state_sim(frame0, 1);
  for (std::size_t t = 1; t < n; ++t) {
    auto frame = recalibrated(recal_, seq.frame(t));
    for (std::size_t s = 0; s < states; ++s) {
      double best = prev[s];
      std::int8_t step = 0;
      if (s >= 1 && prev[s - 1] > best) {
        best = prev[s - 1];
        step = 1;
      }
      // Skip a blank between distinct symbols.
      if (s >= 2 && state_class[s] >= 0 && state_class[s] != state_class[s - 2] &&
          prev[s - 2] > best) {
        best = prev[s - 2];
        step = 2;
      }
      cur[s] = best <= kNegInf ? kNegInf : best + state_sim(frame, s);
      back[t][s] = step;
    }
    std::swap(prev, cur);
  }

  std::size_t end = states - 1;
  if (prev[states - 2] > prev[states - 1]) end = states - 2;
  if (prev[end] <= kNegInf) throw_data("align: no feasible alignment");

  std::vector<int> classes(n);
  std::size_t s = end;
  for (std::size_t t = n; t-- > 0;) {
    classes[t] = state_class[s];
    if (t > 0) s -= static_cast<std::size_t>(back[t][s]);
  }
  return classes;
}

void CentroidModel::train(const std::vector<LabeledExample>& examples) {
  if (class_centroids_.empty())
    throw_usage("train: model has no centroids to start from");
  // Two alignment/update sweeps; classes that attract no frames keep their
  // previous centroid.
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<std::vector<double>> sums(class_centroids_.size() + 1,
                                          std::vector<double>(dim(), 0.0));
    std::vector<std::size_t> counts(class_centroids_.size() + 1, 0);
    for (const auto& ex : examples) {
      if (!ex.features || ex.features->count() == 0) continue;
      if (ex.features->count() < ex.label.size()) continue;  // unalignable
      auto classes = align(*ex.features, ex.label);
      for (std::size_t t = 0; t < classes.size(); ++t) {
        std::size_t slot = classes[t] < 0 ? class_centroids_.size()
                                          : static_cast<std::size_t>(classes[t]);
        auto frame = recalibrated(recal_, ex.features->frame(t));
        for (std::size_t d = 0; d < dim(); ++d) sums[slot][d] += frame[d];
        ++counts[slot];
      }
    }
    for (std::size_t k = 0; k < class_centroids_.size(); ++k) {
      if (counts[k] == 0) continue;
      for (std::size_t d = 0; d < dim(); ++d)
        class_centroids_[k][d] =
            static_cast<float>(sums[k][d] / static_cast<double>(counts[k]));
    }
    if (counts.back() > 0)
      for (std::size_t d = 0; d < dim(); ++d)
        blank_centroid_[d] =
            static_cast<float>(sums.back()[d] / static_cast<double>(counts.back()));
  }
}

std::unique_ptr<Transcriber> CentroidModel::snapshot() const {
  return std::make_unique<CentroidModel>(*this);
}

void CentroidModel::save(const std::filesystem::path& path) const {
  std::filesystem::path fea = path;
  fea.replace_extension(".fea");
  FeatureSequence centroids(dim());
  for (const auto& c : class_centroids_) centroids.push_frame(c);
  centroids.push_frame(blank_centroid_);
  write_features(centroids, fea);

  Json j;
  j["alphabet"] = alphabet_;
  j["centroids"] = fea.filename().string();
  j["recalibration"]["scale"] = recal_.scale;
  j["recalibration"]["shift"] = recal_.shift;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw_data("CentroidModel::save: cannot open " + path.string());
  os << j.dump(2) << '\n';
}

CentroidModel CentroidModel::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw_data("CentroidModel::load: cannot open " + path.string());
  Json j;
  try {
    is >> j;
  } catch (const Json::exception& e) {
    throw_data("CentroidModel::load: malformed " + path.string() + ": " + e.what());
  }
  auto alphabet = j.at("alphabet").get<std::string>();
  auto fea = path.parent_path() / j.at("centroids").get<std::string>();
  FeatureSequence centroids = read_features(fea);
  if (centroids.count() != alphabet.size() + 1)
    throw_data("CentroidModel::load: centroid count does not match alphabet");
  std::vector<std::vector<float>> classes;
  for (std::size_t k = 0; k < alphabet.size(); ++k) {
    auto f = centroids.frame(k);
    classes.emplace_back(f.begin(), f.end());
  }
  auto b = centroids.frame(alphabet.size());
  CentroidModel model(std::move(classes), {b.begin(), b.end()}, alphabet);
  Recalibration r;
  r.scale = j.at("recalibration").at("scale").get<std::vector<float>>();
  r.shift = j.at("recalibration").at("shift").get<std::vector<float>>();
  model.set_recalibration(std::move(r));
  return model;
}

namespace {

struct SupervisedFrames {
  FeatureSequence frames;
  std::vector<int> classes;
};

// Loads an utterance's frames and sidecar classes, applying the prune
// config to both when given.
SupervisedFrames load_supervised(const Utterance& u,
                                 const std::filesystem::path& manifest_path,
                                 const std::optional<PruneConfig>& prune) {
  if (!u.frame_classes)
    throw_data("utterance \"" + u.id + "\": missing frame-class sidecar");
  SupervisedFrames out;
  out.frames = read_features(resolve_ref(manifest_path, u.features));
  out.classes = read_frame_classes(resolve_ref(manifest_path, *u.frame_classes));
  if (out.classes.size() != out.frames.count())
    throw_data("utterance \"" + u.id + "\": sidecar has " +
               std::to_string(out.classes.size()) + " entries for " +
               std::to_string(out.frames.count()) + " frames");
  if (prune) {
    auto result = prune_indices(out.frames, *prune);
    std::vector<int> kept_classes;
    kept_classes.reserve(result.kept_indices.size());
    for (std::size_t idx : result.kept_indices) kept_classes.push_back(out.classes[idx]);
    out.frames = apply_prune(out.frames, result);
    out.classes = std::move(kept_classes);
  }
  return out;
}

}  // namespace

CentroidModel train_from_scratch(const std::vector<Utterance>& utterances,
                                 const std::filesystem::path& manifest_path,
                                 int alphabet_size,
                                 std::optional<PruneConfig> prune) {
  if (alphabet_size < 1) throw_usage("train_from_scratch: alphabet_size must be >= 1");
  if (utterances.empty()) throw_data("train_from_scratch: empty corpus");

  std::size_t dim = 0;
  std::vector<std::vector<double>> sums;
  std::vector<std::size_t> counts(static_cast<std::size_t>(alphabet_size) + 1, 0);
  for (const auto& u : utterances) {
    auto sup = load_supervised(u, manifest_path, prune);
    if (dim == 0) {
      dim = sup.frames.dim;
      sums.assign(static_cast<std::size_t>(alphabet_size) + 1,
                  std::vector<double>(dim, 0.0));
    } else if (sup.frames.dim != dim) {
      throw_data("utterance \"" + u.id + "\": dim mismatch");
    }
    for (std::size_t t = 0; t < sup.frames.count(); ++t) {
      int c = sup.classes[t];
      if (c < -1 || c >= alphabet_size)
        throw_data("utterance \"" + u.id + "\": class index " + std::to_string(c) +
                   " out of range");
      std::size_t slot = c < 0 ? static_cast<std::size_t>(alphabet_size)
                               : static_cast<std::size_t>(c);
      auto frame = sup.frames.frame(t);
      for (std::size_t d = 0; d < dim; ++d) sums[slot][d] += frame[d];
      ++counts[slot];
    }
  }

  std::string alphabet = alphabet_for(alphabet_size);
  std::vector<std::vector<float>> centroids;
  for (int k = 0; k < alphabet_size; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0)
      throw_data("train_from_scratch: empty class " + std::to_string(k) + " ('" +
                 std::string(1, alphabet[static_cast<std::size_t>(k)]) + "')");
    std::vector<float> c(dim);
    for (std::size_t d = 0; d < dim; ++d)
      c[d] = static_cast<float>(sums[static_cast<std::size_t>(k)][d] /
                                static_cast<double>(counts[static_cast<std::size_t>(k)]));
    centroids.push_back(std::move(c));
  }
  if (counts.back() == 0)
    throw_data("train_from_scratch: empty blank class");
  std::vector<float> blank(dim);
  for (std::size_t d = 0; d < dim; ++d)
    blank[d] = static_cast<float>(sums.back()[d] / static_cast<double>(counts.back()));
  return CentroidModel(std::move(centroids), std::move(blank), std::move(alphabet));
}

RecalDiagnostics recalibrate(CentroidModel& model,
                             const std::vector<Utterance>& subset,
                             const std::filesystem::path& manifest_path,
                             std::optional<PruneConfig> prune) {
  if (subset.empty()) throw_usage("recalibrate: empty subset");
  const std::size_t dim = model.dim();
  std::vector<double> sx(dim, 0), st(dim, 0), sxx(dim, 0), sxt(dim, 0);
  std::size_t n = 0;
  for (const auto& u : subset) {
    auto sup = load_supervised(u, manifest_path, prune);
    if (sup.frames.dim != dim)
      throw_data("recalibrate: utterance \"" + u.id + "\": dim mismatch");
    for (std::size_t t = 0; t < sup.frames.count(); ++t) {
      int c = sup.classes[t];
      const auto& target = c < 0 ? model.blank_centroid()
                                 : model.class_centroids().at(static_cast<std::size_t>(c));
      auto frame = sup.frames.frame(t);
      for (std::size_t d = 0; d < dim; ++d) {
        double x = frame[d], y = target[d];
        sx[d] += x;
        st[d] += y;
        sxx[d] += x * x;
        sxt[d] += x * y;
      }
      ++n;
    }
  }
  if (n == 0) throw_data("recalibrate: subset has no frames");

  RecalDiagnostics diag;
  Recalibration r = Recalibration::identity(dim);
  double dn = static_cast<double>(n);
  for (std::size_t d = 0; d < dim; ++d) {
    double var = sxx[d] - sx[d] * sx[d] / dn;
    double cov = sxt[d] - sx[d] * st[d] / dn;
    if (var <= 1e-12 * std::max(1.0, sxx[d])) {
      // Degenerate fit: keep unit scale, absorb the mean residual.
      r.scale[d] = 1.0f;
      r.shift[d] = static_cast<float>((st[d] - sx[d]) / dn);
      diag.degenerate_dims.push_back(d);
    } else {
      double scale = cov / var;
      r.scale[d] = static_cast<float>(scale);
      r.shift[d] = static_cast<float>((st[d] - scale * sx[d]) / dn);
    }
  }
  model.set_recalibration(std::move(r));
  return diag;
}

std::uint64_t feature_fingerprint(const FeatureSequence& seq) {
  // FNV-1a over dim then the raw frame bytes.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const unsigned char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  std::uint64_t dim = seq.dim;
  mix(reinterpret_cast<const unsigned char*>(&dim), sizeof(dim));
  mix(reinterpret_cast<const unsigned char*>(seq.data.data()), seq.data.size() * 4);
  return h;
}

NoisyOracle::NoisyOracle(double error_rate, double improvement_coefficient,
                         std::uint64_t seed, std::string alphabet)
    : error_rate_(error_rate),
      alpha_(improvement_coefficient),
      seed_(seed),
      alphabet_(std::move(alphabet)) {
  if (error_rate_ < 0 || error_rate_ > 1 || alpha_ < 0 || alpha_ > 1)
    throw_usage("NoisyOracle: p and alpha must be in [0, 1]");
  if (alphabet_.empty()) throw_usage("NoisyOracle: empty alphabet");
}

void NoisyOracle::register_truth(const FeatureSequence& seq, const std::string& truth) {
  truth_[feature_fingerprint(seq)] = truth;
}

std::string NoisyOracle::transcribe(const FeatureSequence& seq) const {
  auto it = truth_.find(feature_fingerprint(seq));
  if (it == truth_.end())
    throw_data("NoisyOracle: no hidden ground truth registered for sequence");
  // Seed from (oracle seed, content) so output is deterministic per state.
  std::mt19937_64 rng(seed_ ^ it->first);
  return corrupt_label(it->second, error_rate_, alphabet_, rng);
}

void NoisyOracle::train(const std::vector<LabeledExample>& examples) {
  if (alpha_ == 0.0 || examples.empty()) return;
  double cer_sum = 0.0;
  std::size_t n = 0;
  for (const auto& ex : examples) {
    if (!ex.features) continue;
    auto it = truth_.find(feature_fingerprint(*ex.features));
    if (it == truth_.end())
      throw_data("NoisyOracle: training example \"" + ex.id + "\" has no hidden truth");
    if (it->second.empty()) continue;
    cer_sum += cer(ex.label, it->second);
    ++n;
  }
  if (n == 0) return;
  double q = 1.0 - cer_sum / static_cast<double>(n);
  error_rate_ = std::clamp(error_rate_ * (1.0 - alpha_ * q), 0.0, 1.0);
}

std::unique_ptr<Transcriber> NoisyOracle::snapshot() const {
  return std::make_unique<NoisyOracle>(*this);
}

void NoisyOracle::save(const std::filesystem::path& path) const {
  Json j;
  j["type"] = "noisy_oracle";
  j["error_rate"] = error_rate_;
  j["improvement_coefficient"] = alpha_;
  j["seed"] = seed_;
  j["alphabet"] = alphabet_;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw_data("NoisyOracle::save: cannot open " + path.string());
  os << j.dump(2) << '\n';
}

}  // namespace asrkit
