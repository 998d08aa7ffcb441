// SPDX-License-Identifier: Apache-2.0
#include "asrkit.h"

#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "asrkit/compress.hpp"
#include "asrkit/corpus.hpp"
#include "asrkit/metrics.hpp"
#include "asrkit/pipeline.hpp"
#include "asrkit/types.hpp"

namespace {

thread_local std::string g_last_error;

asrkit_status to_status(const asrkit::Error& e) {
  switch (e.kind()) {
    case asrkit::ErrorKind::kUsage:
      return ASRKIT_ERR_USAGE;
    case asrkit::ErrorKind::kCollapsed:
      return ASRKIT_ERR_COLLAPSED;
    case asrkit::ErrorKind::kData:
    default:
      return ASRKIT_ERR_DATA;
  }
}

template <typename Fn>
asrkit_status guarded(Fn&& fn) {
  try {
    fn();
    return ASRKIT_OK;
  } catch (const asrkit::Error& e) {
    g_last_error = e.what();
    return to_status(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ASRKIT_ERR_DATA;
  }
}

asrkit_status usage_error(const char* msg) {
  g_last_error = msg;
  return ASRKIT_ERR_USAGE;
}

}  // namespace

struct asrkit_features {
  asrkit::FeatureSequence seq;
};

struct asrkit_prune_result {
  asrkit::PruneResult result;
};

extern "C" {

const char* asrkit_last_error(void) { return g_last_error.c_str(); }

asrkit_status asrkit_edit_distance(const char* a, const char* b, size_t* out) {
  if (!a || !b || !out) return usage_error("edit_distance: null argument");
  return guarded([&] { *out = asrkit::edit_distance(a, b); });
}

asrkit_status asrkit_cer(const char* hyp, const char* ref, double* out) {
  if (!hyp || !ref || !out) return usage_error("cer: null argument");
  return guarded([&] { *out = asrkit::cer(hyp, ref); });
}

asrkit_status asrkit_cer_retention(double cer_baseline, double cer_compressed,
                                   double* out) {
  if (!out) return usage_error("cer_retention: null output");
  return guarded([&] { *out = asrkit::cer_retention(cer_baseline, cer_compressed); });
}

asrkit_status asrkit_speedup_ratio(double t_original, double t_accelerated,
                                   double* out) {
  if (!out) return usage_error("speedup_ratio: null output");
  return guarded([&] { *out = asrkit::speedup_ratio(t_original, t_accelerated); });
}

asrkit_status asrkit_predicted_sr(double cost_quad, double cost_lin,
                                  double cost_const, size_t length,
                                  double kept_fraction, double* out) {
  if (!out) return usage_error("predicted_sr: null output");
  return guarded([&] {
    asrkit::CostModel m{cost_quad, cost_lin, cost_const};
    *out = asrkit::predicted_sr(m, length, kept_fraction);
  });
}

asrkit_status asrkit_features_create(uint32_t dim, uint32_t count,
                                     const float* data, asrkit_features** out) {
  if (!out || (count > 0 && !data))
    return usage_error("features_create: null argument");
  if (dim == 0) return usage_error("features_create: dim must be positive");
  return guarded([&] {
    auto* f = new asrkit_features;
    f->seq.dim = dim;
    f->seq.data.assign(data, data + static_cast<size_t>(dim) * count);
    if (!f->seq.valid()) {
      delete f;
      asrkit::throw_data("features_create: non-finite values");
    }
    *out = f;
  });
}

asrkit_status asrkit_features_read(const char* path, asrkit_features** out) {
  if (!path || !out) return usage_error("features_read: null argument");
  return guarded([&] {
    auto* f = new asrkit_features;
    try {
      f->seq = asrkit::read_features(path);
    } catch (...) {
      delete f;
      throw;
    }
    *out = f;
  });
}

asrkit_status asrkit_features_write(const asrkit_features* f, const char* path) {
  if (!f || !path) return usage_error("features_write: null argument");
  return guarded([&] { asrkit::write_features(f->seq, path); });
}

uint32_t asrkit_features_dim(const asrkit_features* f) {
  return f ? static_cast<uint32_t>(f->seq.dim) : 0;
}

uint32_t asrkit_features_count(const asrkit_features* f) {
  return f ? static_cast<uint32_t>(f->seq.count()) : 0;
}

const float* asrkit_features_data(const asrkit_features* f) {
  return f ? f->seq.data.data() : nullptr;
}

void asrkit_features_free(asrkit_features* f) { delete f; }

asrkit_status asrkit_cosine_sim(const float* x, const float* y, size_t dim,
                                double epsilon, double* out) {
  if (!x || !y || !out) return usage_error("cosine_sim: null argument");
  return guarded([&] {
    *out = asrkit::cosine_sim({x, dim}, {y, dim}, epsilon);
  });
}

asrkit_status asrkit_prune(const asrkit_features* f, double theta,
                           asrkit_policy policy, double zero_norm_epsilon,
                           asrkit_prune_result** out) {
  if (!f || !out) return usage_error("prune: null argument");
  return guarded([&] {
    asrkit::PruneConfig cfg;
    cfg.theta = theta;
    cfg.policy = policy == ASRKIT_POLICY_LAST_KEPT
                     ? asrkit::PrunePolicy::kLastKept
                     : asrkit::PrunePolicy::kOriginalAdjacent;
    cfg.zero_norm_epsilon = zero_norm_epsilon;
    auto* r = new asrkit_prune_result;
    try {
      r->result = asrkit::prune_indices(f->seq, cfg);
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

size_t asrkit_prune_kept_count(const asrkit_prune_result* r) {
  return r ? r->result.kept_indices.size() : 0;
}

const size_t* asrkit_prune_kept_indices(const asrkit_prune_result* r) {
  return r ? r->result.kept_indices.data() : nullptr;
}

double asrkit_prune_kept_fraction(const asrkit_prune_result* r) {
  return r ? r->result.kept_fraction : 0.0;
}

asrkit_status asrkit_prune_apply(const asrkit_features* f,
                                 const asrkit_prune_result* r,
                                 asrkit_features** out) {
  if (!f || !r || !out) return usage_error("prune_apply: null argument");
  return guarded([&] {
    auto* pruned = new asrkit_features;
    try {
      pruned->seq = asrkit::apply_prune(f->seq, r->result);
    } catch (...) {
      delete pruned;
      throw;
    }
    *out = pruned;
  });
}

void asrkit_prune_result_free(asrkit_prune_result* r) { delete r; }

asrkit_status asrkit_run_command(const char* name, const char* params_json) {
  if (!name || !params_json) return usage_error("run_command: null argument");
  return guarded([&] {
    nlohmann::json params;
    try {
      params = nlohmann::json::parse(params_json);
    } catch (const nlohmann::json::exception& e) {
      asrkit::throw_usage(std::string("run_command: bad params JSON: ") + e.what());
    }
    asrkit::pipeline::run_command(name, params);
  });
}

}  // extern "C"
