#pragma once

#include <functional>
#include <utility>

#include "mlz/model.hpp"

namespace mlz {

/// Parametrization of the two outer slopes b1(tau), b2(tau) together with
/// their closed-form derivatives. Derivatives are required analytically so
/// the commuting partner is exact rather than finite-differenced.
struct SlopeMap {
    std::function<double(double)> b1, db1, b2, db2;

    /// b1 = beta1 * tau, b2 = beta2 (the reference numerical experiment).
    static SlopeMap linear_b1(double beta1, double beta2);
    /// tau-independent slopes; the partner collapses to zero.
    static SlopeMap constant(double beta1, double beta2);
};

/// The tau-parametrized three-state family. gamma_ij are the couplings at
/// tau = 1; eps0 sets the constant diabatic energy of the middle level
/// through the area rule. Slopes follow `slopes` with b1(1) = beta1,
/// b2(1) = beta2.
struct ThreeStateFamily {
    Complex gamma12, gamma13, gamma23;
    double eps0 = 0.0;
    double beta1 = 1.0, beta2 = 1.0;
    SlopeMap slopes;

    ThreeStateFamily() : slopes(SlopeMap::linear_b1(1.0, 1.0)) {}
    ThreeStateFamily(Complex g12, Complex g13, Complex g23, double eps0_, double beta1_,
                     double beta2_);
};

/// Coefficients of the time-quadratic commuting partner
/// H'(t) = diag(Q) t^2/2 + L t + D  at a fixed tau.
struct QuadraticPartner {
    RealVector Q; // d(tau) of the slope vector
    Matrix L;     // d(tau) of the coupling matrix
    Matrix D;     // r2/2 * A^2
    double r2 = 0.0;
};

/// Nearest-neighbor chain with a one-parameter slope/coupling deformation.
/// `base_*` hold the q = 1 data; `slopes`/`couplings` the current ones.
struct ChainSpec {
    int n_levels = 0;
    double beta = 0.0;
    double g_base = 0.0;
    RealVector base_slopes;
    RealVector base_couplings;
    RealVector slopes;
    RealVector couplings;
    double q = 1.0;

    DiabaticModel to_model() const;
};

/// Parameters of the degenerate bipartite 4-state model and the derived
/// constants used by its closed-form solution.
struct FourStateParams {
    double b = 1.0;
    Complex g1, g2, g3, g4;

    double kappa() const;        // (|g1|^2+|g2|^2)/b
    Complex gamma1() const;      // (g1 g3* + g2 g4*)/sqrt(|g1|^2+|g2|^2)
    Complex gamma2() const;      // (g2 g3* - g1 g4*)/sqrt(|g1|^2+|g2|^2)
    double kappa_plus() const;   // (|gamma1|^2 + |gamma2|^2)/b
    double kappa_minus() const;  // (|gamma1|^2 - |gamma2|^2)/b
    std::pair<double, double> s_plus_minus() const;
};

/// Result of integrating out the steep level of a three-state family:
/// the effective two-level model on the span of the middle/lower levels,
/// the orthogonal splitter pair, and the fast-crossing factor.
struct ReducedThreeState {
    DiabaticModel model;  // levels: 0 = middle (|2>), 1 = lower (|3>)
    Eigen::Vector2d psi1; // components of |psi1> in {|2>,|3>}
    Eigen::Vector2d psi2;
    double p_fast = 0.0;  // 1 - exp(-2 pi (gt12^2 + gt13^2))
};

/// Slope differences of the bipartite 4-state deformation at one tau.
struct BipartiteSlopes {
    double d34, d24, d13, d12;
};

double slope_b1(const ThreeStateFamily& fam, double tau);
double slope_b2(const ThreeStateFamily& fam, double tau);

/// H3(t; tau): B = (b1, 0, -b2) with couplings and middle energy rescaled so
/// every pairwise adiabaticity ratio is tau-independent and the level
/// triangle keeps its area.
DiabaticModel three_state_model(const ThreeStateFamily& fam, double tau);

/// The exact quadratic partner of `three_state_model` at the same tau.
QuadraticPartner three_state_partner(const ThreeStateFamily& fam, double tau);

/// Area of the triangle enclosed by the three diabatic levels,
/// eps(tau)^2 (1/b1 + 1/b2)/2; constant over tau by construction.
double triangle_area(const ThreeStateFamily& fam, double tau);

/// Symmetric three-state demo model: B = (b, 0, -b), nearest couplings g,
/// middle energy eps/sqrt(2).
DiabaticModel demo_three_state(double b, double g, double eps);

/// Effective two-state model with a 1/t level:
/// H = [[-kappa/t + eps, g], [g, -b t]], kappa = g^2/b.
DiabaticModel reduced_two_state(double b, double g, double eps);

/// Embeds demo_three_state(b, g, eps) into a ThreeStateFamily with
/// beta1 = beta2 = b (couplings g at tau = 1).
ThreeStateFamily demo_family(double b, double g, double eps);

/// The steep-slope limit of the family: effective two-level dynamics on
/// {|2>,|3>} with the virtual transitions through the fast level carried by
/// a 1/t projector onto |psi1>. Requires real couplings.
ReducedThreeState reduce_three_state(const ThreeStateFamily& fam);

/// Fast-crossing amplitudes of level 1: (|g12|, |g13|) normalized by the
/// slope differences they cross, i.e. gt12 = |gamma12|/sqrt(beta1),
/// gt13 = |gamma13|/sqrt(beta1+beta2). Their squared sum is the
/// Brundobler-Elser exponent of level 1 divided by 2 pi.
std::pair<double, double> fast_amplitudes(const ThreeStateFamily& fam);

/// Recombine effective-model probabilities started from |psi1> into the
/// original transitions from level 1: P(1->2) = p_fast P(psi1->2), etc.
struct ComposedFromLevel1 {
    double p_1to1, p_1to2, p_1to3;
};
ComposedFromLevel1 compose_from_level1(double p_fast, double p_psi1_to_2, double p_psi1_to_3);

/// Number-sector chain of the bosonic dissociation model: slopes beta*n,
/// couplings (g/sqrt(2)) sqrt((n+1)(n+2)).
ChainSpec bosonic_chain_sector(int n_max, double beta, double g);

/// One-parameter deformation that preserves every adiabaticity ratio:
/// slopes beta_n/(n(1-q)+q), couplings rescaled accordingly. q = 1 restores
/// the base chain exactly.
ChainSpec q_deform(const ChainSpec& chain, double q);

/// The degenerate 4-state model: B = (b, 0, 0, -b), cross couplings only.
DiabaticModel four_state_model(const FourStateParams& p);

/// Its exact order reduction: 3 levels {psi1, psi2, |4>} with a -kappa/t
/// energy on psi1 and couplings gamma1, gamma2 to level 4.
DiabaticModel effective_coulomb_3state(const FourStateParams& p);

/// Closed-form slope differences of the bipartite 4-state deformation.
BipartiteSlopes bipartite_4slopes(double b, double b1, double r2, double tau);

} // namespace mlz
