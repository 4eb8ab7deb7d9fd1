#ifndef CPMX_H
#define CPMX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CPMX_STATUS_OK = 0,
  CPMX_STATUS_NULL_POINTER = 1,
  CPMX_STATUS_INVALID_UTF8 = 2,
  CPMX_STATUS_PARSE_ERROR = 3,
  /**
   * A precondition, constraint or well-formedness check failed.
   */
  CPMX_STATUS_REJECTED = 4,
  CPMX_STATUS_UNKNOWN_PATTERN = 5,
  CPMX_STATUS_PANIC = 6,
} CpmxStatus;

/**
 * Opaque model handle.
 */
typedef struct CpmxModel CpmxModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a model from `len` bytes of JSON.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out` must be writable.
 */
CpmxStatus cpmx_model_load(const uint8_t *bytes, size_t len, CpmxModel **out);

/**
 * Releases a model handle. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be freed twice.
 */
void cpmx_model_free(CpmxModel *model);

/**
 * Canonical JSON serialization.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
CpmxStatus cpmx_model_save(const CpmxModel *model, char **out);

/**
 * Hex SHA-256 of the canonical serialization.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
CpmxStatus cpmx_model_hash(const CpmxModel *model, char **out);

/**
 * Writes the validation report as JSON to `out` and returns `Rejected`
 * when the model is not well-formed. The report is written either way.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
CpmxStatus cpmx_model_validate(const CpmxModel *model, char **out);

/**
 * Applies a concrete pattern (`"vpai"`, `"vrd"`, ...) with JSON parameters.
 * The input handle is left untouched; the result is a new handle.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
CpmxStatus cpmx_apply_pattern(const CpmxModel *model,
                              const char *pattern,
                              const char *params_json,
                              CpmxModel **out);

/**
 * Number of valid configurations.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
CpmxStatus cpmx_count_configurations(const CpmxModel *model, uint64_t *out);

/**
 * Derives a plain model from a configuration given as a JSON object
 * mapping variation point ids to a variant id or null.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
CpmxStatus cpmx_derive_variant(const CpmxModel *model, const char *config_json, CpmxModel **out);

/**
 * DOT rendering of the model.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
CpmxStatus cpmx_export_dot(const CpmxModel *model, char **out);

/**
 * All pattern descriptors as a JSON array.
 *
 * # Safety
 * `out` must be writable.
 */
CpmxStatus cpmx_patterns_json(char **out);

/**
 * Last error of the calling thread as a JSON object, or null if the most
 * recent call succeeded. Owned by the library; valid until the next call.
 */
const char *cpmx_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void cpmx_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPMX_H */
