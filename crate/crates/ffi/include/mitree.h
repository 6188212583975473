#ifndef MITREE_H
#define MITREE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MitreeStatus {
  MITREE_STATUS_OK = 0,
  MITREE_STATUS_NULL_POINTER = 1,
  MITREE_STATUS_INVALID_UTF8 = 2,
  MITREE_STATUS_PARSE_ERROR = 3,
  MITREE_STATUS_VERIFICATION_FAILED = 4,
  MITREE_STATUS_INVALID_ARGUMENT = 5,
  MITREE_STATUS_PANIC = 6,
} MitreeStatus;

/**
 * Selects one of the three certificate forms.
 */
typedef enum MitreeCertificateKind {
  MITREE_CERTIFICATE_KIND_INTERLEAVING = 0,
  MITREE_CERTIFICATE_KIND_GOOD_MAP = 1,
  MITREE_CERTIFICATE_KIND_LABELLING = 2,
} MitreeCertificateKind;

/**
 * A distance certificate in all three forms, with copies of its trees.
 */
typedef struct MitreeCertificate MitreeCertificate;

/**
 * An ordered merge tree.
 */
typedef struct MitreeTree MitreeTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or an empty string.
 * The pointer stays valid until the next call into the library from the
 * same thread.
 */
const char *mitree_last_error(void);

/**
 * Parses a tree document.
 *
 * # Safety
 * `json` must be null or a NUL-terminated string; `out` must be null or
 * point to writable storage for one pointer.
 */
enum MitreeStatus mitree_tree_parse(const char *json, struct MitreeTree **out);

/**
 * Releases a tree. Null is ignored.
 *
 * # Safety
 * `tree` must be null or a handle from [`mitree_tree_parse`] not yet freed.
 */
void mitree_tree_free(struct MitreeTree *tree);

/**
 * # Safety
 * `tree` must be a live handle or null; `out` must be writable or null.
 */
enum MitreeStatus mitree_tree_leaf_count(const struct MitreeTree *tree, size_t *out);

/**
 * Canonical JSON of a tree; free the result with [`mitree_string_free`].
 *
 * # Safety
 * `tree` must be a live handle or null; `out` must be writable or null.
 */
enum MitreeStatus mitree_tree_to_json(const struct MitreeTree *tree, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void mitree_string_free(char *s);

/**
 * Monotone interleaving distance between two trees.
 *
 * # Safety
 * `a` and `b` must be live handles or null; `out` must be writable or null.
 */
enum MitreeStatus mitree_distance(const struct MitreeTree *a,
                                  const struct MitreeTree *b,
                                  double *out);

/**
 * Distance together with an interleaving, good map and labelling
 * attaining it.
 *
 * # Safety
 * `a` and `b` must be live handles or null; `out` must be writable or null.
 */
enum MitreeStatus mitree_certificate_compute(const struct MitreeTree *a,
                                             const struct MitreeTree *b,
                                             struct MitreeCertificate **out);

/**
 * # Safety
 * `cert` must be a live handle or null; `out` must be writable or null.
 */
enum MitreeStatus mitree_certificate_delta(const struct MitreeCertificate *cert, double *out);

/**
 * JSON document of one certificate form; free the result with
 * [`mitree_string_free`].
 *
 * # Safety
 * `cert` must be a live handle or null; `out` must be writable or null.
 */
enum MitreeStatus mitree_certificate_to_json(const struct MitreeCertificate *cert,
                                             enum MitreeCertificateKind kind,
                                             char **out);

/**
 * # Safety
 * `cert` must be null or a handle from [`mitree_certificate_compute`] not
 * yet freed.
 */
void mitree_certificate_free(struct MitreeCertificate *cert);

/**
 * Checks a certificate document of the given kind against two trees at
 * threshold `delta`; pass NaN to use the threshold stored in the document.
 * Returns `MITREE_STATUS_VERIFICATION_FAILED` when the check fails.
 *
 * # Safety
 * `a` and `b` must be live handles or null; `json` must be null or a
 * NUL-terminated string.
 */
enum MitreeStatus mitree_verify(const struct MitreeTree *a,
                                const struct MitreeTree *b,
                                enum MitreeCertificateKind kind,
                                const char *json,
                                double delta);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MITREE_H */
