#ifndef ROOTLOC_H
#define ROOTLOC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every call.
 */
typedef enum {
  RL_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  RL_STATUS_NULL_ARGUMENT = 1,
  /*
   A string argument was not valid UTF-8.
   */
  RL_STATUS_INVALID_UTF8 = 2,
  /*
   Malformed input file or element.
   */
  RL_STATUS_PARSE = 3,
  /*
   Invalid configuration or dataset spec.
   */
  RL_STATUS_CONFIG = 4,
  RL_STATUS_IO = 5,
  /*
   Actual and forecast totals are equal.
   */
  RL_STATUS_NO_ANOMALY = 6,
  /*
   An index argument was out of range.
   */
  RL_STATUS_OUT_OF_RANGE = 7,
  /*
   Some instances of a benchmark failed; the scores are still written.
   */
  RL_STATUS_PARTIAL = 8,
  RL_STATUS_INTERNAL = 9,
} RlStatus;

/*
 Opaque root-cause set.
 */
typedef struct RlResult RlResult;

/*
 Opaque leaf table.
 */
typedef struct RlTable RlTable;

/*
 Localizer settings. Obtain defaults from [`rl_config_default`].
 */
typedef struct {
  double risk_threshold;
  double pep_threshold;
  uint32_t prune_layers;
  bool no_outlier_removal;
  bool no_r1;
  bool no_r2;
  bool no_weights;
  uint32_t trim_k;
  /*
   0 means no cap beyond the number of leaves.
   */
  uint64_t max_iterations;
} RlConfig;

/*
 Scores of one root cause.
 */
typedef struct {
  double ep;
  double risk;
  double r1;
  double r2;
  uint32_t layer;
} RlCause;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static string.
 */
const char *rl_version(void);

/*
 Message of the last failed call on this thread, or null. Valid until the
 next call on this thread.
 */
const char *rl_last_error(void);

RlConfig rl_config_default(void);

/*
 Reads an instance CSV file.

 # Safety
 `path` is a NUL-terminated string; `out` points to writable storage.
 */
RlStatus rl_table_from_csv_file(const char *path, RlTable **out);

/*
 Parses instance CSV text held in memory.

 # Safety
 `text` is a NUL-terminated string; `out` points to writable storage.
 */
RlStatus rl_table_from_csv_str(const char *text, RlTable **out);

/*
 Number of leaves, or 0 for a null table.

 # Safety
 `table` is null or was returned by this library and not yet freed.
 */
uint64_t rl_table_len(const RlTable *table);

/*
 # Safety
 `table` is null or was returned by this library and not yet freed.
 */
void rl_table_free(RlTable *table);

/*
 Localizes the root causes of `table`. A null `cfg` selects the defaults.

 # Safety
 `table` is a live table, `cfg` is null or valid, `out` is writable.
 */
RlStatus rl_localize(const RlTable *table, const RlConfig *cfg, RlResult **out);

/*
 Number of root causes, or 0 for a null result.

 # Safety
 `res` is null or a live result.
 */
uint64_t rl_result_len(const RlResult *res);

/*
 Formatted element (`attr=value&...`) of root cause `index`, borrowed
 from the result.

 # Safety
 `res` is a live result and `out` is writable.
 */
RlStatus rl_result_element(const RlResult *res, uint64_t index, const char **out);

/*
 Scores of root cause `index`.

 # Safety
 `res` is a live result and `out` is writable.
 */
RlStatus rl_result_cause(const RlResult *res, uint64_t index, RlCause *out);

/*
 Why the search stopped: `explained`, `no_candidate` or `iteration_cap`.

 # Safety
 `res` is null or a live result.
 */
const char *rl_result_termination(const RlResult *res);

/*
 The result as CSV text (`element,risk,ep,layer,r1,r2`). Release with
 [`rl_string_free`].

 # Safety
 `res` is a live result and `out` is writable.
 */
RlStatus rl_result_to_csv(const RlResult *res, char **out);

/*
 # Safety
 `res` is null or was returned by this library and not yet freed.
 */
void rl_result_free(RlResult *res);

/*
 # Safety
 `s` is null or was returned through a `char **` out-parameter of this
 library and not yet freed.
 */
void rl_string_free(char *s);

/*
 Writes a synthetic dataset for preset `S`, `L` or `H` into `out_dir`.
 `instances = 0` keeps the preset's count.

 # Safety
 `preset` and `out_dir` are NUL-terminated strings.
 */
RlStatus rl_generate(const char *preset, const char *out_dir, uint64_t instances, uint64_t seed);

/*
 Runs and scores every instance of a dataset directory. Writes the
 micro-averaged F1 and the number of failed instances; returns
 [`RlStatus::Partial`] when some instances failed.

 # Safety
 `dataset_dir` is a NUL-terminated string, `cfg` is null or valid, and
 the out pointers are null or writable.
 */
RlStatus rl_evaluate(const char *dataset_dir,
                     const RlConfig *cfg,
                     uint32_t jobs,
                     double *f1_out,
                     uint64_t *failures_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROOTLOC_H */
