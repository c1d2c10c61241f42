#include <cstdio>
#include "mlz/families.hpp"
#include "mlz/propagator.hpp"
using namespace mlz;
int main() {
    for (int k = 1; k <= 40; ++k) {
        double eps = 0.2 * k;
        DiabaticModel m = reduced_two_state(1.0, 2.0, eps);
        ScatterConfig cfg; cfg.t_max = 1000.0;
        try {
            ScatterResult r = propagate_coulomb_halfline(m, 0, cfg);
            if (r.window_deviation > 1e-4 || r.t_max_used != 1000.0)
                std::printf("eps=%.2f: P=%.6f dev=%.2e t_max=%g\n", eps, r.probabilities[0], r.window_deviation, r.t_max_used);
        } catch (const Error& e) {
            std::printf("eps=%.2f: FAIL %s\n", eps, e.what());
        }
    }
    std::puts("scan done");
    return 0;
}
