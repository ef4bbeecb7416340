/* C interface to the autoscore library. Every function returns an
 * as_status; on failure as_last_error() describes the problem for the
 * calling thread. Strings returned through char** are heap-allocated and
 * must be released with as_string_free(). */
#ifndef AUTOSCORE_AUTOSCORE_H
#define AUTOSCORE_AUTOSCORE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(AUTOSCORE_BUILDING_LIBRARY)
#define AS_API __declspec(dllexport)
#else
#define AS_API __declspec(dllimport)
#endif
#else
#define AS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum as_status {
  AS_OK = 0,
  AS_E_INVALID_ARGUMENT = 1,
  AS_E_INVALID_COMPONENT = 2,
  AS_E_MISSING_COMPONENT = 3,
  AS_E_UNKNOWN_PRESET = 4,
  AS_E_TRANSPORT = 5,
  AS_E_AUTH = 6,
  AS_E_CACHE_MISS = 7,
  AS_E_NO_RATING_FOUND = 8,
  AS_E_UNKNOWN_LABEL_TOKEN = 9,
  AS_E_OFF_SCALE_LABEL = 10,
  AS_E_SCORING_FAILURE = 11,
  AS_E_PARSE = 12,
  AS_E_UNKNOWN_LABEL = 13,
  AS_E_DUPLICATE_RESPONSE_ID = 14,
  AS_E_EMPTY_MATRIX = 15,
  AS_E_DIVIDE_BY_ZERO = 16,
  AS_E_CONFIG = 17,
  AS_E_OVERLAP = 18,
  AS_E_INVALID_TRANSITION = 19,
  AS_E_NOT_FOUND = 20,
  AS_E_IO = 21,
  AS_E_INTERNAL = 100
} as_status;

/* Label ranks. */
#define AS_BEGINNING 0
#define AS_DEVELOPING 1
#define AS_PROFICIENT 2
#define AS_NO_MAJORITY (-1)

typedef struct as_session as_session;

AS_API const char* as_version(void);
AS_API const char* as_status_name(as_status status);
/* Message of the last failed call on this thread ("" if none). */
AS_API const char* as_last_error(void);
AS_API void as_string_free(char* s);
/* Process exit code for a status: 0 ok, 2 configuration, 4 cache miss,
 * 1 anything else. */
AS_API int as_exit_code(as_status status);

/* Route library log lines (level 0 info, 1 warning, 2 error) to a callback;
 * NULL restores the stderr default. */
typedef void (*as_log_fn)(int level, const char* message, void* user);
AS_API void as_set_log_callback(as_log_fn fn, void* user);

/* Experiment sessions. */
AS_API as_status as_session_open(const char* config_path, as_session** out);
AS_API void as_session_close(as_session* session);
/* mode: live | record | replay | replay-strict */
AS_API as_status as_session_set_mode(as_session* session, const char* mode);
AS_API as_status as_session_set_seed(as_session* session, uint64_t seed);
AS_API as_status as_session_set_output_dir(as_session* session, const char* dir);
AS_API as_status as_session_set_parallelism(as_session* session, size_t parallelism);
/* Current configuration with overrides applied, as JSON. */
AS_API as_status as_session_config_json(const as_session* session, char** out);

/* Runs the grid. exit_code receives 0, or 3 when failures exceed the
 * tolerance; summary (optional) receives the failure summary. */
AS_API as_status as_run(as_session* session, int* exit_code, char** summary);
AS_API as_status as_report(as_session* session);
/* dir may be NULL for <output>/samples. */
AS_API as_status as_sample(as_session* session, const char* dir);
/* Validation record and metrics as JSON. strategy/policy may be NULL. */
AS_API as_status as_validate_prompt(as_session* session, const char* version_id, const char* validation_set,
                                    const char* strategy, const char* policy, char** result_json);
/* Tab-separated call and token totals from a run manifest. */
AS_API as_status as_cost(const char* manifest_path, char** table);

/* Prompt registry. */
AS_API as_status as_registry_list(const char* registry_dir, char** json_out);
AS_API as_status as_registry_show(const char* registry_dir, const char* version_id, char** json_out);
AS_API as_status as_registry_add(const char* registry_dir, const char* task_id, const char* version_id,
                                 const char* components_dir, const char* author);
AS_API as_status as_registry_review(const char* registry_dir, const char* version_id, const char* reviewer,
                                    const char* note);
AS_API as_status as_registry_approve(const char* registry_dir, const char* version_id, const char* reviewer,
                                     const char* note);
AS_API as_status as_registry_revise(const char* registry_dir, const char* version_id, const char* new_version_id,
                                    const char* reviewer, const char* note);

/* Stand-alone helpers. */
/* scale: "binomial" or "trinomial". */
AS_API as_status as_extract_rating(const char* reply, const char* scale, int* label_rank);
/* AS_NO_MAJORITY when all three differ. */
AS_API as_status as_majority_vote(const int labels[3], int* label_rank);
/* counts: k*k row-major, rows gold, columns predicted; k is 2 or 3. */
AS_API as_status as_qwk(const uint64_t* counts, size_t k, double* out);
AS_API as_status as_accuracy(const uint64_t* counts, size_t k, double* out);
/* Messages as JSON [{role, content}] for one response. */
AS_API as_status as_assemble_prompt(const char* task_path, const char* components_dir, const char* strategy,
                                    const char* response_text, char** json_out);

#ifdef __cplusplus
}
#endif

#endif
