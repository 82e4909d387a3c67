#include <stdio.h>
#include <string.h>
#include "intdiff.h"

#define CHECK(x) do { if (!(x)) { fprintf(stderr, "failed: %s\n", #x); return 1; } } while (0)

int main(void) {
    IntdiffWord *w = NULL, *n = NULL;
    char *s = NULL;
    CHECK(intdiff_word_parse("q1", &w) == INTDIFF_STATUS_OK);
    CHECK(intdiff_word_normalize(w, &n) == INTDIFF_STATUS_OK);
    CHECK(intdiff_word_to_string(n, &s) == INTDIFF_STATUS_OK);
    CHECK(strcmp(s, "D2 I1") == 0);
    intdiff_string_free(s);

    IntdiffPoly *f = NULL, *g = NULL;
    CHECK(intdiff_poly_parse("poly 1->1 on (0,1) : x1", &f) == INTDIFF_STATUS_OK);
    CHECK(intdiff_poly_apply_word(f, w, INTDIFF_ORIENTATION_FTC, &g) == INTDIFF_STATUS_OK);
    CHECK(intdiff_poly_to_string(g, &s) == INTDIFF_STATUS_OK);
    printf("%s\n", s);
    intdiff_string_free(s);

    IntdiffPoly *bad = NULL;
    CHECK(intdiff_poly_parse("poly 1->1 on (0,1) : x1 +", &bad) == INTDIFF_STATUS_PARSE);
    CHECK(bad == NULL);
    CHECK(intdiff_last_error() != NULL);

    intdiff_poly_free(f);
    intdiff_poly_free(g);
    intdiff_word_free(w);
    intdiff_word_free(n);
    return 0;
}
