#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "taupsd.h"

static int report(const char *what, TaupsdStatus s) {
    char msg[512];
    taupsd_last_error_message(msg, sizeof msg, NULL);
    fprintf(stderr, "%s failed with status %d: %s\n", what, (int)s, msg);
    return 1;
}

int main(void) {
    TaupsdGrid *grid = NULL;
    TaupsdPhaseSymbol *sym = NULL;
    TaupsdKernel *kernel = NULL;
    TaupsdStatus s;

    printf("taupsd %s\n", taupsd_version());
    if ((s = taupsd_grid_new(1, 32, 8.0, &grid)) != TAUPSD_STATUS_OK) return report("grid", s);
    if ((s = taupsd_phase_symbol_from_corpus("gauss(sigma=1)", grid, &sym)) != TAUPSD_STATUS_OK)
        return report("symbol", s);
    if ((s = taupsd_quantize_scalar(sym, 0.5, &kernel)) != TAUPSD_STATUS_OK) return report("quantize", s);

    double p[3] = {1.0, 2.0, INFINITY};
    double norms[3];
    if ((s = taupsd_kernel_schatten(kernel, p, 3, norms)) != TAUPSD_STATUS_OK) return report("schatten", s);
    double hs;
    taupsd_kernel_hs_norm(kernel, &hs);
    printf("trace %.12f hs %.12f op %.12f\n", norms[0], norms[1], norms[2]);
    if (!(norms[0] >= norms[1] && norms[1] >= norms[2]) || fabs(norms[1] - hs) > 1e-10 * hs) {
        fprintf(stderr, "inconsistent norms\n");
        return 1;
    }

    s = taupsd_phase_symbol_from_corpus("nosuch(a=1)", grid, &sym);
    if (s != TAUPSD_STATUS_LOOKUP) {
        fprintf(stderr, "expected a lookup error, got %d\n", (int)s);
        return 1;
    }

    taupsd_kernel_free(kernel);
    taupsd_phase_symbol_free(sym);
    taupsd_grid_free(grid);
    printf("ok\n");
    return 0;
}
