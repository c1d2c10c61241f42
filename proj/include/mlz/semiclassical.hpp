#pragma once

#include <utility>
#include <vector>

#include "mlz/families.hpp"
#include "mlz/model.hpp"

namespace mlz {

/// Complex gap-closure points, the contour action to the selected one and
/// the assembled over-gap probability.
struct DykhneResult {
    Complex t1, t2;     // upper-half-plane roots
    double action = 0.0; // Im of the gap integral to the selected root
    double P = 0.0;
    double eta = 1.0;
    int selected = 0;   // which root minimized the action
    bool degenerate_roots = false;
};

/// Upper-half-plane zeros of the two-level gap of the 1/t model:
/// t = (2ig - eps +- sqrt(eps^2 - 4 i eps g)) / (2b), principal root.
std::pair<Complex, Complex> branch_points(double b, double g, double eps);

/// Im of the gap integral from real t0 to the complex point t1 along the
/// straight segment, branch tracked from t0, adaptive quadrature.
/// `avoid` lists points the segment must not approach within branch_tol.
double dykhne_action(const DiabaticModel& two_level, double t0, Complex t1,
                     double quad_tol = 1e-10, double branch_tol = 1e-8,
                     const std::vector<Complex>& avoid = {});

/// Over-gap probability of the effective 1/t model by the adiabatic-limit
/// formula, both roots tried, smaller action kept.
DykhneResult dykhne_probability(double b, double g, double eps, double eta = 1.0, double t0 = 1.0);

/// Leading-exponent transition probability of the symmetric three-state
/// model: (1 - e^{-2 pi g^2/b}) * eta * e^{-2 action}.
double p3_semiclassical(double b, double g, double eps, double eta = 1.0);

/// Survival of the extremal-slope level, e^{-2 pi sum |gamma|^2}.
double be_survival(const std::vector<double>& gammas);

/// Exact stay probability of the 1/t model at eps = 0:
/// 2 e^{-pi g^2/b} / (1 + e^{-pi g^2/b}).
double p22_exact_eps0(double g, double b);

/// Closed-form probabilities of the degenerate 4-state model.
struct FourStateExact {
    double p_1to1, p_1to4, p_1todeg;
};
FourStateExact p14_exact(const FourStateParams& p);

/// Mean boson number after the sweep, 2 (e^{pi g^2/beta} - 1).
double avg_n_exact(double g, double beta);

} // namespace mlz
