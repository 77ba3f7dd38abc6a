/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SGSACC_H
#define SGSACC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SgsStatus {
  SGS_STATUS_OK = 0,
  SGS_STATUS_NULL_ARGUMENT = 1,
  SGS_STATUS_INVALID_UTF8 = 2,
  SGS_STATUS_INVALID_INPUT = 3,
  SGS_STATUS_BACKEND = 4,
  SGS_STATUS_PANIC = 5,
} SgsStatus;

typedef enum SgsLabel {
  SGS_LABEL_ENTAILMENT = 0,
  SGS_LABEL_NEUTRAL = 1,
  SGS_LABEL_CONTRADICTION = 2,
} SgsLabel;

/**
 * A parsed schema catalog.
 */
typedef struct SgsCatalog SgsCatalog;

/**
 * Schemas, instances, references and an NLI backend, ready to evaluate.
 * Safe to share between threads once created.
 */
typedef struct SgsSession SgsSession;

/**
 * Session settings. `nli_url` selects the remote backend when non-null;
 * otherwise the deterministic mock is used.
 */
typedef struct SgsOptions {
  bool validation;
  bool augmentation;
  bool exact_case_ser;
  uint32_t negatives_per_slot;
  uint64_t seed;
  const char *nli_url;
} SgsOptions;

typedef struct SgsVerdict {
  double entailment;
  double neutral;
  double contradiction;
  enum SgsLabel label;
} SgsVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *sgs_version(void);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next library call on the same thread.
 */
const char *sgs_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void sgs_string_free(char *s);

struct SgsOptions sgs_options_default(void);

/**
 * Parses a schema file's contents.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SgsStatus sgs_catalog_from_json(const char *json, struct SgsCatalog **out);

/**
 * # Safety
 * `catalog` must be null or a live handle from [`sgs_catalog_from_json`].
 */
void sgs_catalog_free(struct SgsCatalog *catalog);

/**
 * Candidate references for one action of `service`, as a JSON array of
 * `{"text", "rule_id"}`. The action is JSON: `{"intent", "slot", "values"}`.
 *
 * # Safety
 * Pointers must be valid; `out` receives a string for [`sgs_string_free`].
 */
enum SgsStatus sgs_build_candidates(const struct SgsCatalog *catalog,
                                    const char *service,
                                    const char *action_json,
                                    char **out);

/**
 * Premise augmented with a previous turn and slot description; either
 * may be null.
 *
 * # Safety
 * Pointers must be valid; `out` receives a string for [`sgs_string_free`].
 */
enum SgsStatus sgs_augment_premise(const char *utterance,
                                   const char *previous_turn,
                                   const char *slot_description,
                                   char **out);

/**
 * Classifies a pair with the deterministic mock backend.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SgsStatus sgs_mock_classify(const char *premise,
                                 const char *hypothesis,
                                 struct SgsVerdict *out);

/**
 * Loads schemas and instances and builds references.
 * `unseen_domains_json` is a JSON array of domain names or null;
 * `options` may be null for defaults.
 *
 * # Safety
 * Pointers must be valid; `out` receives a handle for [`sgs_session_free`].
 */
enum SgsStatus sgs_session_new(const char *schemas_json,
                               const char *instances_json,
                               const char *unseen_domains_json,
                               const struct SgsOptions *options,
                               struct SgsSession **out);

/**
 * # Safety
 * `session` must be null or a live handle from [`sgs_session_new`].
 */
void sgs_session_free(struct SgsSession *session);

/**
 * Validates every ground truth. Output JSON:
 * `{"run", "instances", "excluded", "exclusion_rate", "outcomes"}`.
 *
 * # Safety
 * Pointers must be valid; `out` receives a string for [`sgs_string_free`].
 */
enum SgsStatus sgs_session_validate(const struct SgsSession *session, char **out);

/**
 * Scores a generations file's contents (JSON array or JSON Lines) for every
 * system it contains. Output JSON: `{"run", "systems", "details"}` where
 * `details` maps system id to per-instance results.
 *
 * # Safety
 * Pointers must be valid; `out` receives a string for [`sgs_string_free`].
 */
enum SgsStatus sgs_session_evaluate(const struct SgsSession *session,
                                    const char *generations_json,
                                    char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGSACC_H */
