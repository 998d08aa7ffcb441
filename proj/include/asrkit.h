/* SPDX-License-Identifier: Apache-2.0
 *
 * C API for libasrkit: frame-sequence compression, edit-distance metrics,
 * weak-label refinement and the pipeline commands behind the asrkit CLI.
 *
 * All functions return an asrkit_status; on failure a thread-local message
 * is available via asrkit_last_error(). Opaque handles are freed with their
 * matching *_free function.
 */
#ifndef ASRKIT_H
#define ASRKIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum asrkit_status {
  ASRKIT_OK = 0,
  ASRKIT_ERR_USAGE = 1,     /* bad arguments or configuration */
  ASRKIT_ERR_DATA = 2,      /* malformed or inconsistent input data */
  ASRKIT_ERR_COLLAPSED = 3, /* refinement produced an empty retained set */
} asrkit_status;

typedef enum asrkit_policy {
  ASRKIT_POLICY_ORIGINAL_ADJACENT = 0,
  ASRKIT_POLICY_LAST_KEPT = 1,
} asrkit_policy;

/* Message from the most recent failing call on this thread. */
const char* asrkit_last_error(void);

/* --- metrics ----------------------------------------------------------- */

asrkit_status asrkit_edit_distance(const char* a, const char* b, size_t* out);
asrkit_status asrkit_cer(const char* hyp, const char* ref, double* out);
asrkit_status asrkit_cer_retention(double cer_baseline, double cer_compressed,
                                   double* out);
asrkit_status asrkit_speedup_ratio(double t_original, double t_accelerated,
                                   double* out);
asrkit_status asrkit_predicted_sr(double cost_quad, double cost_lin,
                                  double cost_const, size_t length,
                                  double kept_fraction, double* out);

/* --- feature sequences -------------------------------------------------- */

typedef struct asrkit_features asrkit_features;

asrkit_status asrkit_features_create(uint32_t dim, uint32_t count,
                                     const float* data, asrkit_features** out);
asrkit_status asrkit_features_read(const char* path, asrkit_features** out);
asrkit_status asrkit_features_write(const asrkit_features* f, const char* path);
uint32_t asrkit_features_dim(const asrkit_features* f);
uint32_t asrkit_features_count(const asrkit_features* f);
const float* asrkit_features_data(const asrkit_features* f);
void asrkit_features_free(asrkit_features* f);

/* --- pruning ------------------------------------------------------------ */

asrkit_status asrkit_cosine_sim(const float* x, const float* y, size_t dim,
                                double epsilon, double* out);

typedef struct asrkit_prune_result asrkit_prune_result;

asrkit_status asrkit_prune(const asrkit_features* f, double theta,
                           asrkit_policy policy, double zero_norm_epsilon,
                           asrkit_prune_result** out);
size_t asrkit_prune_kept_count(const asrkit_prune_result* r);
const size_t* asrkit_prune_kept_indices(const asrkit_prune_result* r);
double asrkit_prune_kept_fraction(const asrkit_prune_result* r);
asrkit_status asrkit_prune_apply(const asrkit_features* f,
                                 const asrkit_prune_result* r,
                                 asrkit_features** out);
void asrkit_prune_result_free(asrkit_prune_result* r);

/* --- pipeline ------------------------------------------------------------
 * name: gen | prune | refine | sweep | eval | bench | report.
 * params_json: the command's parameter object; the same schema that every
 * command echoes into <out>/resolved_config.json, so a run can be replayed
 * from that record verbatim.
 */
asrkit_status asrkit_run_command(const char* name, const char* params_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ASRKIT_H */
