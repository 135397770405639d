#ifndef FIBERVM_H
#define FIBERVM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FvmMode {
  FVM_MODE_ONE_SHOT = 0,
  FVM_MODE_MULTI_SHOT = 1,
} FvmMode;

typedef enum FvmOutcome {
  FVM_OUTCOME_DONE = 0,
  FVM_OUTCOME_FATAL = 1,
  FVM_OUTCOME_STEP_BUDGET_EXCEEDED = 2,
} FvmOutcome;

typedef enum FvmStatus {
  FVM_STATUS_OK = 0,
  FVM_STATUS_NULL_ARG = 1,
  FVM_STATUS_INVALID_UTF8 = 2,
  FVM_STATUS_PARSE_ERROR = 3,
  FVM_STATUS_NOT_AN_INT = 4,
  FVM_STATUS_UNKNOWN_KEY = 5,
  FVM_STATUS_INVALID_OPTIONS = 6,
  FVM_STATUS_PANIC = 7,
} FvmStatus;

// A parsed program.
typedef struct FvmProgram FvmProgram;

// The result of one run.
typedef struct FvmResult FvmResult;

// Run options. Start from `fvm_options_default` and change fields.
typedef struct FvmOptions {
  enum FvmMode mode;
  bool opt_exn;
  bool backtrace_on_error;
  uint64_t max_steps;
  uint64_t initial_words;
  uint64_t red_zone_words;
  uint64_t frame_words;
  size_t cache_capacity;
} FvmOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Default run options: one-shot continuations, exception fast path on.
struct FvmOptions fvm_options_default(void);

// Parses NUL-terminated program text. On success `*out` owns a new
// program, to be released with `fvm_program_free`.
//
// # Safety
// `source` must be NULL or a valid C string; `out` must be NULL or writable.
enum FvmStatus fvm_program_parse(const char *source, struct FvmProgram **out);

// # Safety
// `program` must be NULL or come from `fvm_program_parse`, freed once.
void fvm_program_free(struct FvmProgram *program);

// Runs a program. `options` may be NULL for the defaults. On success
// `*out` owns a new result, to be released with `fvm_result_free`.
// A fatal outcome is still `FVM_STATUS_OK`; inspect `fvm_result_outcome`.
//
// # Safety
// `program` must be a live program; `options` NULL or valid; `out` writable.
enum FvmStatus fvm_run(const struct FvmProgram *program,
                       const struct FvmOptions *options,
                       struct FvmResult **out);

// # Safety
// `result` must be NULL or come from `fvm_run`, freed once.
void fvm_result_free(struct FvmResult *result);

// How the run ended. NULL reads as fatal.
//
// # Safety
// `result` must be NULL or a live result.
enum FvmOutcome fvm_result_outcome(const struct FvmResult *result);

// Stores the final value in `*out` when it is an integer.
//
// # Safety
// `result` must be NULL or live; `out` NULL or writable.
enum FvmStatus fvm_result_int(const struct FvmResult *result, int64_t *out);

// The printed final value, or NULL if the run did not finish.
//
// # Safety
// `result` must be NULL or a live result.
const char *fvm_result_value(const struct FvmResult *result);

// The fatal error description, or NULL if the run was not fatal.
//
// # Safety
// `result` must be NULL or a live result.
const char *fvm_result_fatal(const struct FvmResult *result);

// Number of lines the program printed.
//
// # Safety
// `result` must be NULL or a live result.
size_t fvm_result_output_len(const struct FvmResult *result);

// Printed line `index`, or NULL when out of range.
//
// # Safety
// `result` must be NULL or a live result.
const char *fvm_result_output_line(const struct FvmResult *result, size_t index);

// Number of continuations dropped without being resumed.
//
// # Safety
// `result` must be NULL or a live result.
size_t fvm_result_leak_count(const struct FvmResult *result);

// Looks up a metric by its flat key, e.g. `steps_total` or `rule.EffHn`.
//
// # Safety
// `result` live or NULL; `key` a C string or NULL; `out` writable or NULL.
enum FvmStatus fvm_result_metric(const struct FvmResult *result, const char *key, uint64_t *out);

// Message for the last failed call on this thread, or NULL.
// Valid until the next call into this library on the same thread.
const char *fvm_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FIBERVM_H */
