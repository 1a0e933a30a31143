#ifndef DLSENUM_H
#define DLSENUM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum DlsStatus {
  DLS_STATUS_OK = 0,
  DLS_STATUS_NULL_POINTER = 1,
  DLS_STATUS_INVALID_ARGUMENT = 2,
  DLS_STATUS_UNSUPPORTED = 3,
  DLS_STATUS_IO = 4,
  DLS_STATUS_FORMAT = 5,
  DLS_STATUS_MISMATCH = 6,
  DLS_STATUS_BUFFER_TOO_SMALL = 7,
  DLS_STATUS_PANIC = 8,
} DlsStatus;

/**
 * Opaque fill plan.
 */
typedef struct DlsPlan DlsPlan;

/**
 * A 128-bit count split into halves.
 */
typedef struct DlsCount {
  uint64_t lo;
  uint64_t hi;
} DlsCount;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call on the same thread.
 */
const char *dls_last_error(void);

/**
 * Builds a plan. `constraints` is "ls", "dls" or "vsdls". `fixed`
 * ("first-row" or "first-row-and-column"), `layout` ("heuristic",
 * "hourglass", "row-major") and `lookahead` ("default", "off", "A..B") may
 * be NULL. Plain Latin squares then fix the first row and column, the
 * others the first row only.
 *
 * # Safety
 * String arguments must be NULL or NUL-terminated; `out` must be writable.
 */
enum DlsStatus dls_plan_new(uint32_t order,
                            const char *constraints,
                            const char *fixed,
                            const char *layout,
                            const char *lookahead,
                            struct DlsPlan **out);

/**
 * Releases a plan. NULL is ignored.
 *
 * # Safety
 * `plan` must come from [`dls_plan_new`] and not be used afterwards.
 */
void dls_plan_free(struct DlsPlan *plan);

/**
 * Number of plan steps.
 *
 * # Safety
 * `plan` must be a live plan and `out` writable.
 */
enum DlsStatus dls_plan_len(const struct DlsPlan *plan, size_t *out);

/**
 * Writes the plan fingerprint (16 hex digits and a NUL) into `buf`.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes.
 */
enum DlsStatus dls_plan_fingerprint(const struct DlsPlan *plan, char *buf, size_t cap);

/**
 * Counts every square the plan covers (first row fixed, or first row and
 * column for plain Latin squares). `threads` 0 uses every core.
 *
 * # Safety
 * `plan` must be a live plan and `out` writable.
 */
enum DlsStatus dls_count(const struct DlsPlan *plan, uint32_t threads, struct DlsCount *out);

/**
 * Completions of the first `len` plan steps assigned to `prefix`.
 *
 * # Safety
 * `prefix` must point to `len` bytes; `out` must be writable.
 */
enum DlsStatus dls_count_prefix(const struct DlsPlan *plan,
                                const uint8_t *prefix,
                                size_t len,
                                struct DlsCount *out);

/**
 * Multiplier from the plan's normalized count to all squares.
 *
 * # Safety
 * `plan` must be a live plan and `out` writable.
 */
enum DlsStatus dls_total_multiplier(const struct DlsPlan *plan, struct DlsCount *out);

/**
 * Symmetry-broken count with the first row fixed. Optional outputs may be
 * NULL.
 *
 * # Safety
 * `constraints` must be NUL-terminated; non-NULL outputs must be writable.
 */
enum DlsStatus dls_count_symmetric(uint32_t order,
                                   const char *constraints,
                                   uint32_t threads,
                                   struct DlsCount *out,
                                   uint64_t *hourglass_seen,
                                   uint64_t *canonical);

/**
 * Checks an `order`×`order` grid given row by row; 255 marks an empty cell
 * when `allow_partial` is set. Writes the number of violations.
 *
 * # Safety
 * `cells` must point to `order * order` bytes; `violations` must be writable.
 */
enum DlsStatus dls_validate(uint32_t order,
                            const uint8_t *cells,
                            const char *constraints,
                            bool allow_partial,
                            size_t *violations);

/**
 * Writes the workunit file for prefixes of `depth` steps (0 for the
 * default depth) and the number of workunits.
 *
 * # Safety
 * `path` must be NUL-terminated; `count` may be NULL.
 */
enum DlsStatus dls_workunits_generate(const struct DlsPlan *plan,
                                      size_t depth,
                                      const char *path,
                                      uint64_t *count);

/**
 * Counts every workunit of `units` not yet in `results`, appending to it.
 * Writes the running sum over all completed workunits.
 *
 * # Safety
 * Strings must be NUL-terminated; `sum` may be NULL.
 */
enum DlsStatus dls_workunits_run(const char *units,
                                 const char *results,
                                 const char *run_tag,
                                 uint32_t threads,
                                 bool symmetric,
                                 struct DlsCount *sum);

/**
 * Merges results files under a quorum. Returns `Mismatch` when the total
 * is withheld; `validated` is written either way.
 *
 * # Safety
 * `paths` must point to `count` NUL-terminated strings; outputs may be NULL.
 */
enum DlsStatus dls_workunits_merge(const char *const *paths,
                                   size_t count,
                                   uint32_t quorum,
                                   struct DlsCount *total,
                                   uint64_t *validated);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DLSENUM_H */
