#include <math.h>
#include <stdio.h>
#include "adctr.h"

static double rosen(const double *x, size_t n, void *user) {
    (void)n; (void)user;
    double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
}

static int32_t rosen_grad(const double *x, size_t n, double *g, void *user) {
    (void)n; (void)user;
    double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return 0;
}

int main(void) {
    AdctrConfig *cfg = adctr_config_new();
    if (adctr_config_set_strategy(cfg, ADCTR_STRATEGY_ADM) != ADCTR_CODE_OK) return 1;
    double x0[2] = {-1.2, 1.0};
    AdctrReport *rep = NULL;
    if (adctr_minimize(cfg, 2, x0, rosen, rosen_grad, NULL, &rep) != ADCTR_CODE_OK) return 2;
    AdctrCounters c;
    adctr_report_counters(rep, &c);
    double x[2];
    adctr_report_x(rep, x, 2);
    printf("status %d iters %zu nf %zu ng %zu x %.6f %.6f\n", (int)adctr_report_status(rep), c.iters, c.nf, c.ng, x[0], x[1]);
    int ok = adctr_report_status(rep) == ADCTR_STATUS_CONVERGED && fabs(x[0] - 1.0) < 1e-4 && c.nf == c.iters + 1;
    adctr_report_free(rep);

    if (adctr_minimize_problem(cfg, "Extended Powell", 6, &rep) != ADCTR_CODE_BAD_DIMENSION) return 3;
    if (adctr_last_error() == NULL) return 4;
    adctr_config_free(cfg);
    return ok ? 0 : 5;
}
