/* C interface to the censored-duration MTE estimators.
 *
 * Objects are opaque handles released with their *_free function. Every
 * call returns a cm_status; on failure cm_last_error() describes the error
 * as a JSON object {"error", "code", "message", "detail"} that stays valid
 * until the next failing call on the same thread. Strings returned through
 * char** outputs are owned by the caller and released with cm_string_free.
 *
 * Configuration is passed as a JSON object; keys mirror the command-line
 * flags (see README). Unknown keys are ignored, missing keys take defaults.
 */
#ifndef CENSMTE_CENSMTE_H
#define CENSMTE_CENSMTE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CM_API __declspec(dllexport)
#else
#define CM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cm_status {
  CM_OK = 0,
  CM_INVALID_ARGUMENT = 1,
  CM_IO = 2,
  CM_PARSE = 3,
  CM_MISSING_COLUMN = 4,
  CM_INVARIANT_VIOLATION = 5,
  CM_SINGLETON_DECIDER = 6,
  CM_EMPTY_RESULT = 7,
  CM_RANK_DEFICIENT = 8,
  CM_DEGENERATE_TREATMENT = 9,
  CM_TOO_FEW_CLUSTERS = 10,
  CM_NONCONVERGENCE = 11,
  CM_ALL_SAME_OUTCOME = 12,
  CM_UNUSABLE_CELL = 13,
  CM_INVALID_HORIZON = 14,
  CM_EMPTY_DELTA_GRID = 15,
  CM_REPLICATE_FAILURE = 16,
  CM_INVALID_SPEC = 17,
  CM_NO_CLOSED_FORM = 18,
  CM_OVERLAP = 19,
  CM_CHECK_FAILED = 20, /* a verification ran and did not pass */
  CM_INTERNAL = 99
} cm_status;

typedef struct cm_table cm_table;   /* validated observation table */
typedef struct cm_result cm_result; /* point estimates, optional bootstrap bands */

CM_API const char* cm_version(void);
CM_API const char* cm_last_error(void);
CM_API void cm_string_free(char* s);

/* Tables. column_map_json: {"y","c","d","z","x","cluster","decider"}; NULL
 * uses the default names with x, cluster and decider absent. */
CM_API cm_status cm_table_load_csv(const char* path, const char* column_map_json, cm_table** out);
CM_API cm_status cm_table_save_csv(const cm_table* table, const char* path);
CM_API cm_status cm_table_rows(const cm_table* table, size_t* rows);
CM_API cm_status cm_table_summary_json(const cm_table* table, char** out);
CM_API void cm_table_free(cm_table* table);

/* Caseload filter, leave-one-out instrument and overlap check per config.
 * *out is a new table; the input is untouched. */
CM_API cm_status cm_table_prepare(const cm_table* table, const char* config_json, cm_table** out,
                                  char** report_json);

/* Simulates the DGP described by spec_json. latent_path may be NULL. */
CM_API cm_status cm_simulate(const char* spec_json, size_t n, uint64_t seed, unsigned threads,
                             const char* latent_path, cm_table** out);

/* Point estimation; bootstrap adds symmetric bands to an existing result. */
CM_API cm_status cm_estimate(const cm_table* table, const char* config_json, cm_result** out);
CM_API cm_status cm_bootstrap(const cm_table* table, cm_result* result, const char* config_json);
CM_API cm_status cm_result_diagnostics_json(const cm_result* result, const cm_table* table,
                                            char** out);
CM_API cm_status cm_result_surfaces_csv(const cm_result* result, char** out);
/* Writes surfaces.csv (+ sidecar), diagnostics.json and distreg.json into
 * the config's out_dir. */
CM_API cm_status cm_result_write(const cm_result* result, const cm_table* table);
CM_API void cm_result_free(cm_result* result);

/* Bounds (bounds_mode regdep|relax, bbar) or the breakdown curve
 * (breakdown = true), written into the config's out_dir. */
CM_API cm_status cm_bounds_write(const cm_result* result, const cm_table* table,
                                 const char* config_json);

/* Exact check of the embedded two-arm PMF fixture. fixture_json may be NULL
 * for the built-in table. *pass is 1 when every quantity matches. */
CM_API cm_status cm_toy_check(const char* fixture_json, char** out_json, int* pass);

#ifdef __cplusplus
}
#endif

#endif /* CENSMTE_CENSMTE_H */
