#ifndef STLC_H
#define STLC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum StlcStatus {
  STLC_STATUS_OK = 0,
  STLC_STATUS_NULL_POINTER = 1,
  STLC_STATUS_INVALID_UTF8 = 2,
  STLC_STATUS_PARSE = 3,
  /**
   * The term is ill-typed.
   */
  STLC_STATUS_TYPE_ERROR = 4,
  STLC_STATUS_INVALID_ARGUMENT = 5,
  /**
   * An output buffer is too small; the required length is still reported.
   */
  STLC_STATUS_BUFFER_TOO_SMALL = 6,
  STLC_STATUS_INTERNAL = 7,
} StlcStatus;

typedef enum StlcOptimizerKind {
  STLC_OPTIMIZER_KIND_ADAM = 0,
  STLC_OPTIMIZER_KIND_RADAM = 1,
  STLC_OPTIMIZER_KIND_ADAFACTOR = 2,
} StlcOptimizerKind;

/**
 * Opaque optimizer state.
 */
typedef struct StlcOptimizer StlcOptimizer;

/**
 * Opaque rule table for the global typing context.
 */
typedef struct StlcRuleTable StlcRuleTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *stlc_last_error(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void stlc_string_free(char *s);

/**
 * Infers the type of `term` and writes it, printed, to `*out`.
 *
 * # Safety
 * `term` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StlcStatus stlc_infer(const char *term, char **out);

/**
 * Rule table over the global context (base type `T`, 32 bound names).
 */
struct StlcRuleTable *stlc_rule_table_new(void);

/**
 * # Safety
 * `table` must come from [`stlc_rule_table_new`] or be NULL.
 */
void stlc_rule_table_free(struct StlcRuleTable *table);

/**
 * Number of rule IDs, specials included. 0 for a NULL handle.
 *
 * # Safety
 * `table` must be a live handle or NULL.
 */
uintptr_t stlc_rule_table_num_ids(const struct StlcRuleTable *table);

/**
 * The rules file text.
 *
 * # Safety
 * `table` must be a live handle and `out` a valid pointer.
 */
enum StlcStatus stlc_rule_table_rules_text(const struct StlcRuleTable *table, char **out);

/**
 * The vocabulary as a JSON object.
 *
 * # Safety
 * `table` must be a live handle and `out` a valid pointer.
 */
enum StlcStatus stlc_rule_table_vocab_json(const struct StlcRuleTable *table, char **out);

/**
 * Encodes a printed type as its rule IDs (no framing). `*len` receives the
 * sequence length; when it exceeds `cap`, nothing is written and
 * `BufferTooSmall` is returned.
 *
 * # Safety
 * `ids` must hold `cap` elements (or be NULL with `cap == 0`); `len` must
 * be valid.
 */
enum StlcStatus stlc_encode_type(const struct StlcRuleTable *table,
                                 const char *ty,
                                 uint32_t *ids,
                                 uintptr_t cap,
                                 uintptr_t *len);

/**
 * Decodes rule IDs into a printed type. Sequences that do not form a type
 * decode to `<error>` with status `Ok`.
 *
 * # Safety
 * `ids` must hold `len` elements and `out` be a valid pointer.
 */
enum StlcStatus stlc_decode_rule_ids(const struct StlcRuleTable *table,
                                     const uint32_t *ids,
                                     uintptr_t len,
                                     char **out);

/**
 * Greedy decoding of a row-major `rows x cols` score matrix; `cols` must
 * equal the number of rule IDs.
 *
 * # Safety
 * `scores` must hold `rows * cols` values and `out` be a valid pointer.
 */
enum StlcStatus stlc_decode_greedy(const struct StlcRuleTable *table,
                                   const double *scores,
                                   uintptr_t rows,
                                   uintptr_t cols,
                                   char **out);

/**
 * Type-checks and encodes one term as a JSON object with the model input
 * and decoder target fields.
 *
 * # Safety
 * `term` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StlcStatus stlc_encode_example(const struct StlcRuleTable *table,
                                    uint64_t id,
                                    const char *term,
                                    char **out);

/**
 * Generates `n` well-typed examples as dataset JSONL.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum StlcStatus stlc_gen_dataset(uint64_t seed,
                                 uintptr_t n,
                                 uintptr_t max_type_depth,
                                 uintptr_t max_term_depth,
                                 double p_branch,
                                 char **out);

/**
 * Optimizer with built-in default hyperparameters. Adam and RAdam treat
 * the parameters as a flat vector of `rows * cols`; Adafactor factors its
 * second moment when both are above 1. Returns NULL on bad arguments.
 */
struct StlcOptimizer *stlc_optimizer_new(enum StlcOptimizerKind kind,
                                         uintptr_t rows,
                                         uintptr_t cols);

/**
 * # Safety
 * `opt` must come from [`stlc_optimizer_new`] or be NULL.
 */
void stlc_optimizer_free(struct StlcOptimizer *opt);

/**
 * One optimizer step, applied to `params` in place. For Adafactor an `lr`
 * that is not positive selects its internal relative step size; otherwise
 * `lr` replaces it. On error the parameters and state are unchanged.
 *
 * # Safety
 * `params` and `grads` must each hold `len` values; `opt` must be live.
 */
enum StlcStatus stlc_optimizer_step(struct StlcOptimizer *opt,
                                    double *params,
                                    const double *grads,
                                    uintptr_t len,
                                    double lr);

/**
 * Learning rate of a schedule (`const`, `warmup:K`, `noam`, `anneal[:K]`)
 * at step `step` (1-based); `lr` is the target rate where one is used.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StlcStatus stlc_schedule_value(const char *spec, double lr, uint64_t step, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STLC_H */
