#ifndef INTDIFF_H
#define INTDIFF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IntdiffOrientation {
  INTDIFF_ORIENTATION_FTC = 0,
  INTDIFF_ORIENTATION_SWAPPED = 1,
} IntdiffOrientation;

typedef enum IntdiffStatus {
  INTDIFF_STATUS_OK = 0,
  INTDIFF_STATUS_NULL_ARGUMENT = 1,
  INTDIFF_STATUS_INVALID_UTF8 = 2,
  INTDIFF_STATUS_PARSE = 3,
  INTDIFF_STATUS_DOMAIN = 4,
  INTDIFF_STATUS_PANIC = 5,
} IntdiffStatus;

typedef enum IntdiffWordEq {
  INTDIFF_WORD_EQ_EQUAL = 0,
  INTDIFF_WORD_EQ_NOT_EQUAL = 1,
  INTDIFF_WORD_EQ_UNKNOWN = 2,
} IntdiffWordEq;

/**
 * A polynomial map on an open box.
 */
typedef struct IntdiffPoly IntdiffPoly;

/**
 * A word of the integro-differential monoid.
 */
typedef struct IntdiffWord IntdiffWord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next library call on the same thread.
 */
const char *intdiff_last_error(void);

/**
 * Library version as a static string.
 */
const char *intdiff_version(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void intdiff_string_free(char *s);

/**
 * Parses `poly m->n on <box> : c1; c2; ...`.
 *
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be writable.
 */
enum IntdiffStatus intdiff_poly_parse(const char *src, struct IntdiffPoly **out);

/**
 * # Safety
 * `p` must come from this library and not have been freed.
 */
void intdiff_poly_free(struct IntdiffPoly *p);

/**
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum IntdiffStatus intdiff_poly_to_string(const struct IntdiffPoly *p, char **out);

/**
 * Arity and codimension.
 *
 * # Safety
 * `p` must be a live handle; `arity` and `codim` must be writable.
 */
enum IntdiffStatus intdiff_poly_shape(const struct IntdiffPoly *p,
                                      uintptr_t *arity,
                                      uintptr_t *codim);

/**
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum IntdiffStatus intdiff_poly_equal(const struct IntdiffPoly *a,
                                      const struct IntdiffPoly *b,
                                      bool *out);

/**
 * The action `w . f` (rightmost letter first).
 *
 * # Safety
 * `f` and `w` must be live handles; `out` must be writable.
 */
enum IntdiffStatus intdiff_poly_apply_word(const struct IntdiffPoly *f,
                                           const struct IntdiffWord *w,
                                           enum IntdiffOrientation o,
                                           struct IntdiffPoly **out);

/**
 * `f ∘ g` under the strict range guard.
 *
 * # Safety
 * `f` and `g` must be live handles; `out` must be writable.
 */
enum IntdiffStatus intdiff_poly_compose(const struct IntdiffPoly *f,
                                        const struct IntdiffPoly *g,
                                        struct IntdiffPoly **out);

/**
 * Parses whitespace-separated letters such as `D2 I1`.
 *
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be writable.
 */
enum IntdiffStatus intdiff_word_parse(const char *src, struct IntdiffWord **out);

/**
 * # Safety
 * `w` must come from this library and not have been freed.
 */
void intdiff_word_free(struct IntdiffWord *w);

/**
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum IntdiffStatus intdiff_word_to_string(const struct IntdiffWord *w, char **out);

/**
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum IntdiffStatus intdiff_word_normalize(const struct IntdiffWord *w, struct IntdiffWord **out);

/**
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum IntdiffStatus intdiff_word_eq(const struct IntdiffWord *a,
                                   const struct IntdiffWord *b,
                                   uint64_t seed,
                                   enum IntdiffWordEq *out);

/**
 * Evaluates a term with no opaque leaves. `env` may be NULL or hold
 * declarations, one per line.
 *
 * # Safety
 * `src` must be a NUL-terminated string, `env` NULL or NUL-terminated, and
 * `out` writable.
 */
enum IntdiffStatus intdiff_term_eval(const char *src,
                                     const char *env,
                                     enum IntdiffOrientation o,
                                     struct IntdiffPoly **out);

/**
 * Runs one catalogue checker; `verified` receives the verdict.
 *
 * # Safety
 * `rule` must be a NUL-terminated string and `verified` writable.
 */
enum IntdiffStatus intdiff_check_relation(const char *rule,
                                          uintptr_t trials,
                                          uint64_t seed,
                                          enum IntdiffOrientation o,
                                          bool *verified);

/**
 * Smooth evaluation of a pre-derivation given in text form, as `(a, b, ...)`.
 *
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be writable.
 */
enum IntdiffStatus intdiff_prederiv_eval_smooth(const char *src, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTDIFF_H */
