#ifndef DECLINEFORGE_H
#define DECLINEFORGE_H

/* C interface to the declineforge pipeline library. All functions return a
 * df_status; on any non-DF_OK result df_last_error() holds a thread-local
 * human-readable message until the next call on the same thread. */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum df_status {
  DF_OK = 0,
  DF_ERROR = 1,      /* generic failure (io, parse, data, argument) */
  DF_CONFIG = 2,     /* invalid configuration */
  DF_DEPENDENCY = 3, /* upstream pipeline stage missing */
  DF_DIVERGED = 4    /* training produced a non-finite loss */
} df_status;

const char* df_last_error(void);

/* ---- pipeline -------------------------------------------------------- */

/* stage: synth | cluster | split | pretrain | embed | evaluate | run-all |
 * report. workspace_override may be NULL (use the config's path);
 * seed_override < 0 leaves the config's cohort seed untouched. */
df_status df_run_stage(const char* config_path, const char* stage, int force,
                       const char* workspace_override, long long seed_override);

/* Formatted evaluation report. *out is malloc'd; free with df_string_free. */
df_status df_report(const char* config_path, const char* workspace_override,
                    char** out);
void df_string_free(char* s);

/* ---- volumes --------------------------------------------------------- */

typedef struct df_volume df_volume;

df_status df_volume_load(const char* path, df_volume** out);
df_status df_volume_save(const df_volume* v, const char* path);
/* Linear rescale of the value range onto [0, 255]. */
df_status df_volume_normalize(const df_volume* v, df_volume** out);
df_status df_volume_dims(const df_volume* v, int dims[3]);
/* Borrowed pointer into the volume's x-fastest float buffer. */
df_status df_volume_data(const df_volume* v, const float** data, size_t* n);
void df_volume_free(df_volume* v);

/* ---- trajectory distance -------------------------------------------- */

/* cost: 0 = squared, 1 = absolute. band_radius < 0 = unconstrained. */
df_status df_dtw_distance(const double* a, int na, const double* b, int nb,
                          int cost, int band_radius, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DECLINEFORGE_H */
