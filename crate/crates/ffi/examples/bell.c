/* Reduced state of the Bell pair and a few seeded measurements.
 *
 *   cargo build -p qmeasure-ffi
 *   cc crates/ffi/examples/bell.c -Icrates/ffi/include \
 *      target/debug/libqmeasure_ffi.a -lpthread -ldl -lm -o bell
 */
#include <stdio.h>

#include "qmeasure.h"

static int check(QmStatus st, const char *what) {
    if (st != QM_STATUS_OK) {
        char *msg = qm_last_error();
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)st, msg ? msg : "?");
        qm_string_free(msg);
        return 1;
    }
    return 0;
}

int main(void) {
    QmState *phi = NULL;
    QmDensity *rho = NULL, *alice = NULL;
    const char *keep[] = {"alice"};

    if (check(qm_state_bell_phi("alice", "bob", &phi), "bell_phi")) return 1;
    if (check(qm_state_to_density(phi, &rho), "to_density")) return 1;
    if (check(qm_density_partial_trace(rho, keep, 1, &alice), "partial_trace")) return 1;

    for (size_t i = 0; i < 2; i++) {
        for (size_t j = 0; j < 2; j++) {
            double re, im;
            qm_density_entry(alice, i, j, &re, &im);
            printf("%6.3f%+6.3fi ", re, im);
        }
        printf("\n");
    }

    const char *labels[] = {"s"};
    size_t dims[] = {2};
    double re[] = {0.6, 0.8};
    QmState *psi = NULL;
    if (check(qm_state_new(labels, dims, 1, re, NULL, 2, &psi), "state_new")) return 1;
    QmRng *rng = qm_rng_new(42);
    int ones = 0;
    for (int k = 0; k < 1000; k++) {
        QmMeasurement m;
        if (check(qm_measure(psi, QM_BASIS_Z, rng, &m), "measure")) return 1;
        ones += (int)m.outcome_index;
    }
    printf("outcome 1 in %d of 1000 shots\n", ones);

    qm_rng_free(rng);
    qm_state_free(psi);
    qm_density_free(alice);
    qm_density_free(rho);
    qm_state_free(phi);
    return 0;
}
