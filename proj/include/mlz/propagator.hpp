#pragma once

#include <optional>
#include <vector>

#include "mlz/families.hpp"
#include "mlz/model.hpp"

namespace mlz {

/// Tolerances and window layout for one scattering run.
struct ScatterConfig {
    double t_max = 1000.0;
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double rho = 0.0;          // 0 => 1e-3 * min(1, 1/max|B|)
    double window_check = 0.5; // probabilities are also read at window_check * t_max

    double effective_rho(const DiabaticModel& model) const;
};

/// Outcome of one scattering run. `probabilities` are the asymptotically
/// corrected |a_n|^2 at the final time; `window_deviation` is the entrywise
/// disagreement between the two readout windows. Levels whose entire
/// diagonal time dependence coincides (degenerate, mutually uncoupled) form
/// a group: only the group sums are basis-independent observables, so the
/// window check compares `group_probabilities`; per-level values are still
/// reported.
struct ScatterResult {
    RealVector probabilities;
    RealVector group_probabilities;
    std::vector<int> group_of; // level -> group index
    StateVector final_state;   // interaction picture
    double norm_drift = 0.0;
    double window_deviation = 0.0;
    double t_max_used = 0.0;
    bool window_ok = false;
    long steps = 0;
};

struct TwoTimeSegment {
    enum class Vary { t, tau };
    Vary vary;
    double from = 0.0;
    double to = 0.0;
    double fixed = 0.0; // the coordinate held constant along the segment
};

struct TwoTimePath {
    std::vector<TwoTimeSegment> segments;
};

struct TwoTimeResult {
    Matrix U;
    double unitarity_residual = 0.0;
    long steps = 0;
};

/// Scattering over the symmetric window (-t_max, t_max). Models with a 1/t
/// term are integrated along the contour that passes below t = 0 on a
/// semicircle of radius rho. The run is accepted when the two readout
/// windows agree; otherwise t_max is doubled once and NotConverged is thrown
/// if the check still fails.
ScatterResult propagate_scattering(const DiabaticModel& model, int init_level,
                                   const ScatterConfig& cfg);
ScatterResult propagate_scattering(const DiabaticModel& model, const Vector& init,
                                   const ScatterConfig& cfg);

/// Scattering on (rho, t_max] for models with a 1/t term, starting in
/// `init_level` at t = rho with the pure diabatic phase convention.
ScatterResult propagate_coulomb_halfline(const DiabaticModel& model, int init_level,
                                         const ScatterConfig& cfg);
ScatterResult propagate_coulomb_halfline(const DiabaticModel& model, const Vector& init,
                                         const ScatterConfig& cfg);

/// Full transition matrix (every initial basis state).
TransitionMatrix propagate_matrix(const DiabaticModel& model, const ScatterConfig& cfg);

/// Path-ordered evolution in the (t, tau) plane: t-segments evolve with
/// H(t; tau), tau-segments with the quadratic partner at fixed t. The result
/// is the evolution matrix in the interaction picture anchored to the phase
/// field B_n(tau) t^2/2 + A_nn(tau) t, so |U_nm|^2 are transition
/// probabilities between diabatic states.
TwoTimeResult propagate_two_time(const ThreeStateFamily& fam, const TwoTimePath& path,
                                 const ScatterConfig& cfg);

/// Bare in-picture integration of one real-time window, no boundary
/// corrections. Building block for tests (time reversal, oracle comparison).
StateVector propagate_window(const DiabaticModel& model, const StateVector& state, double t_to,
                             const ScatterConfig& cfg, long* steps = nullptr);

/// Mean chain index sum_k k |a_k|^2.
double expectation_n(const StateVector& state);

/// Diabatic <-> interaction picture conversion at a real time.
Vector to_interaction_picture(const DiabaticModel& model, const Vector& diabatic, double t);
Vector to_diabatic_picture(const DiabaticModel& model, const Vector& interaction, double t);

} // namespace mlz
