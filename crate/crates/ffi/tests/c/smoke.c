#include <stdio.h>
#include <string.h>

#include "photonlab.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        PhlStatus s_ = (call);                                             \
        if (s_ != PHL_STATUS_OK) {                                         \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, phl_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    PhlStream *photons = NULL, *a = NULL, *b = NULL;
    CHECK(phl_gen_coherent(2e5, 2.0, 11, &photons));
    CHECK(phl_beamsplitter(photons, 0.5, 12, &a, &b));

    PhlHistogram *h = NULL;
    CHECK(phl_histogram(a, b, 1000, 50000, PHL_HISTOGRAM_MODE_ALL_PAIRS, &h));
    PhlG2 *g = NULL;
    CHECK(phl_normalize_g2(h, &g));
    double value = 0, sigma = 0;
    CHECK(phl_g2_window(g, 50000, &value, &sigma));

    double v = 0;
    CHECK(phl_visibility("{\"center_wavelength_nm\": 700, \"shape\": \"lorentzian\", \"linewidth\": 1e9}", 1e-9, &v));

    /* Errors come back as codes with a message. */
    PhlStream *bad = NULL;
    uint64_t unsorted[] = {5, 3};
    PhlStatus s = phl_stream_from_times(unsorted, 2, 10, &bad);
    int ok = s == PHL_STATUS_PARSE_ERROR && bad == NULL && strlen(phl_last_error()) > 0;

    printf("%zu %zu %.4f %.4f %.6f %d\n", phl_stream_len(photons), phl_histogram_len(h), value, sigma, v, ok);

    phl_g2_free(g);
    phl_histogram_free(h);
    phl_stream_free(a);
    phl_stream_free(b);
    phl_stream_free(photons);
    return ok ? 0 : 1;
}
