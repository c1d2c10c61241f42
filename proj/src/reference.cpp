#include "mlz/reference.hpp"

#include <cmath>

namespace mlz {
namespace reference {

Vector propagate_rk4_raw(const DiabaticModel& model, const Vector& init, double t_from,
                         double t_to, double h) {
    if (model.has_coulomb() && t_from * t_to <= 0.0)
        throw SingularTime("propagate_rk4_raw: window crosses t = 0 with a 1/t term");
    const Complex mi(0.0, -1.0);
    const int n = model.n();
    const long steps = std::lround(std::ceil(std::abs(t_to - t_from) / h));
    const double dt = (t_to - t_from) / double(steps);

    Vector y = init, k1(n), k2(n), k3(n), k4(n), tmp(n);
    auto f = [&](double t, const Vector& v, Vector& out) {
        out.noalias() = mi * (hamiltonian_at(model, Complex(t, 0.0)) * v);
    };
    double t = t_from;
    for (long s = 0; s < steps; ++s) {
        f(t, y, k1);
        tmp = y + 0.5 * dt * k1;
        f(t + 0.5 * dt, tmp, k2);
        tmp = y + 0.5 * dt * k2;
        f(t + 0.5 * dt, tmp, k3);
        tmp = y + dt * k3;
        f(t + dt, tmp, k4);
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = t_from + double(s + 1) * dt;
    }
    return y;
}

} // namespace reference
} // namespace mlz
