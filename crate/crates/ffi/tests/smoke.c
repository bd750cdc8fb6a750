#include <math.h>
#include <stdio.h>
#include <string.h>
#include "opx.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, opx_last_error()); return 1; } } while (0)

int main(void) {
    OpxEquilibrium *eq = NULL;
    CHECK(opx_equilibrium_solve("gue", 1.0, 0, &eq) == OPX_STATUS_OK);
    double a, b, l, psi;
    CHECK(opx_equilibrium_constants(eq, &a, &b, &l) == OPX_STATUS_OK);
    CHECK(fabs(a + sqrt(2.0)) < 1e-10 && fabs(b - sqrt(2.0)) < 1e-10);
    CHECK(fabs(l + 1.0 + log(2.0)) < 1e-8);
    CHECK(opx_equilibrium_psi(eq, 0.0, &psi) == OPX_STATUS_OK);
    CHECK(fabs(psi - sqrt(2.0) / M_PI) < 1e-10);
    CHECK(opx_equilibrium_psi(eq, 3.0, &psi) == OPX_STATUS_DOMAIN);
    CHECK(strlen(opx_last_error()) > 0);
    char *json = NULL;
    CHECK(opx_equilibrium_summary_json(eq, &json) == OPX_STATUS_OK);
    CHECK(strstr(json, "\"alpha\"") != NULL);
    opx_string_free(json);
    opx_equilibrium_free(eq);

    CHECK(opx_equilibrium_solve("nope", 1.0, 0, &eq) == OPX_STATUS_UNKNOWN_FIELD);
    CHECK(eq == NULL);

    OpxPhase *ph = NULL;
    double re, im;
    CHECK(opx_phase_new("quad", &ph) == OPX_STATUS_OK);
    CHECK(opx_phase_integral(ph, 100.0, &re, &im) == OPX_STATUS_OK);
    CHECK(fabs(re - 0.120225036962688869626) < 1e-12 && fabs(im - 0.116734179985924668432) < 1e-12);
    opx_phase_free(ph);
    printf("ok %s\n", opx_version());
    return 0;
}
