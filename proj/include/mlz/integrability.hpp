#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mlz/families.hpp"
#include "mlz/model.hpp"
#include "mlz/propagator.hpp"

namespace mlz {

/// Residuals of the two-time integrability structure, max-abs-entry norms
/// taken over the evaluation grid.
struct ResidualReport {
    double max_flatness = 0.0;   // || dH/dtau - dH'/dt ||
    double max_commutator = 0.0; // || [H, H'] ||
    double cond_slope_coupling = 0.0; // || 1/2 [B', A] + [A', B] ||
    double cond_coupling_d = 0.0;     // || [A', A] + [D, B] ||
    double cond_commuting_d = 0.0;    // || [A, D] ||
    std::string grid;
};

/// Checks zero curvature of (H3, H3') for a family on tau x t grids,
/// with all derivatives in closed form.
ResidualReport check_zero_curvature(const ThreeStateFamily& fam, const std::vector<double>& tau_grid,
                                    const std::vector<double>& t_grid);

/// Same residuals for a deliberately broken family whose couplings are held
/// fixed instead of rescaled (negative control for the checker).
ResidualReport check_zero_curvature_broken(const ThreeStateFamily& fam,
                                           const std::vector<double>& tau_grid,
                                           const std::vector<double>& t_grid);

using MatrixFn = std::function<Matrix(double)>;

/// Generic residuals of the commuting-partner conditions for user-supplied
/// B(tau), A(tau), D(tau); tau derivatives by 4th-order central differences
/// with step h.
ResidualReport check_mlz_conditions(const MatrixFn& B, const MatrixFn& A, const MatrixFn& D,
                                    const std::vector<double>& tau_grid, double h = 1e-5);

/// The tau-parametrized q-deformation path of a chain, q(tau) = e^{beta r tau},
/// packaged for check_mlz_conditions with D = -(r/2) A^2.
struct ChainDeformationPath {
    MatrixFn B, A, D;
};
ChainDeformationPath chain_deformation_path(const ChainSpec& base, double r);

/// Transition probabilities across a tau grid and their maximum entrywise
/// deviation from the tau = 1 reference.
struct InvarianceSweepResult {
    std::vector<double> tau_values;
    std::vector<TransitionMatrix> matrices;
    double max_deviation = 0.0;
    double max_norm_drift = 0.0;
    double max_stochastic_residual = 0.0;
};

InvarianceSweepResult invariance_sweep(const ThreeStateFamily& fam,
                                       const std::vector<double>& tau_values,
                                       const ScatterConfig& cfg, int threads = 0);

/// Same sweep with the middle energy frozen at its tau = 1 value (breaking
/// the area rule); deviations should then be large (negative control).
InvarianceSweepResult invariance_sweep_broken_eps(const ThreeStateFamily& fam,
                                                  const std::vector<double>& tau_values,
                                                  const ScatterConfig& cfg, int threads = 0);

} // namespace mlz
