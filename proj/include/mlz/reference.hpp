#pragma once

#include "mlz/model.hpp"

namespace mlz {
namespace reference {

/// Fixed-step classical Runge-Kutta propagation of the raw Schrodinger
/// equation i da/dt = H(t) a, no picture change, no adaptivity. Serial
/// reference used as the independent oracle for the adaptive
/// interaction-picture path and as the benchmark baseline. The window must
/// not cross t = 0 when the model carries a 1/t term.
Vector propagate_rk4_raw(const DiabaticModel& model, const Vector& init, double t_from,
                         double t_to, double h);

} // namespace reference
} // namespace mlz
