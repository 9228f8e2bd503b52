/* C interface to the symbolic-regression toolkit. All functions return a
 * status code; srk_last_error() describes the most recent failure on the
 * calling thread. Strings returned through char** are heap-allocated and must
 * be released with srk_string_free(). */
#ifndef SRKIT_H
#define SRKIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum srk_status {
  SRK_OK = 0,
  SRK_ERR_INVALID = 1, /* bad argument or configuration */
  SRK_ERR_IO = 2,      /* file could not be read or written */
  SRK_ERR_RUNTIME = 3  /* stage failure while running */
} srk_status;

const char* srk_version(void);

/* Most recent error message on this thread; empty string when none. */
const char* srk_last_error(void);

void srk_string_free(char* s);

/* ---- datasets ------------------------------------------------------- */

typedef struct srk_dataset srk_dataset;

/* Bundled benchmark problems A..E. apply_default_noise != 0 adds each
 * problem's default noise. */
srk_status srk_dataset_generate(char experiment, size_t samples, uint64_t seed,
                                int apply_default_noise, srk_dataset** out);

/* CSV with a header row; the column named "target" (or the last one) is the
 * regression target. */
srk_status srk_dataset_load_csv(const char* path, srk_dataset** out);
srk_status srk_dataset_save_csv(const srk_dataset* d, const char* path);

size_t srk_dataset_rows(const srk_dataset* d);
size_t srk_dataset_features(const srk_dataset* d);

void srk_dataset_free(srk_dataset* d);

/* Provenance record for a generated dataset (JSON). */
srk_status srk_generation_manifest(char experiment, size_t samples, uint64_t seed,
                                   int with_default_noise, char** out_json);

/* ---- pipeline ------------------------------------------------------- */

/* Runs the full discovery pipeline. pipeline_json / knowledge_json may be
 * NULL or empty for defaults; both mirror the documented config field names.
 * The report is returned as JSON. include_timing = 0 omits wall-clock fields,
 * making the report byte-stable for a given seed. Returns SRK_ERR_RUNTIME
 * when a stage failed; the partial report is still written. */
srk_status srk_fit(const srk_dataset* d, const char* pipeline_json, const char* knowledge_json,
                   int include_timing, char** out_report_json);

/* ---- experiment harness --------------------------------------------- */

/* Repeated pipeline runs on a bundled problem with per-experiment desk
 * presets; the JSON carries the structure vote, prefactor, and per-repeat
 * rows. samples = 0 uses the experiment default. */
srk_status srk_benchmark(char experiment, size_t samples, int repeats, uint64_t seed,
                         char** out_json);

/* Expert-hint on/off grid on the knowledge experiment (CSV, one row per
 * junction combination). corners_only != 0 runs only all-off and all-on. */
srk_status srk_knowledge_ablation(int repeats, uint64_t seed, int corners_only, size_t samples,
                                  char** out_csv);

/* Noise robustness grid for experiments A and C. modes is a comma-separated
 * subset of "input,target,both". Returns CSV. */
srk_status srk_noise_sweep(char experiment, const double* levels, size_t n_levels,
                           const char* modes, int repeats, uint64_t seed, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* SRKIT_H */
