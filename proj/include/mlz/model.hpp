#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "mlz/errors.hpp"

namespace mlz {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// One driven multilevel Hamiltonian
///
///     H(t) = diag(Q) t^2/2 + diag(B) t + A + diag(K)/t,
///
/// with real diagonal coefficient vectors Q, B, K and a constant Hermitian
/// coupling matrix A. Q and K default to zero. When `coulomb_frame` is set,
/// the 1/t term acts as  F diag(K) F^H / t  instead: the pole stays diagonal
/// in the frame F while the model as a whole is expressed in the diabatic
/// basis (used by the order-reduction constructions).
///
/// Instances are immutable after construction and safe to share across threads.
struct DiabaticModel {
    RealVector Q;
    RealVector B;
    Matrix A;
    RealVector K;
    Matrix coulomb_frame; // empty => identity
    bool degenerate_allowed = false;

    DiabaticModel() = default;
    DiabaticModel(RealVector b, Matrix a);
    DiabaticModel(RealVector q, RealVector b, Matrix a, RealVector k);

    int n() const { return static_cast<int>(B.size()); }
    bool has_coulomb() const { return K.size() > 0 && K.cwiseAbs().maxCoeff() > 0.0; }
    bool has_frame() const { return coulomb_frame.size() > 0; }

    /// Effective 1/t coefficient matrix (diag(K) or its frame conjugate).
    Matrix coulomb_matrix() const;

    /// Checks Hermiticity of A and diagonal vector sizes; throws on violation.
    void validate() const;
};

/// Wavefunction amplitudes together with the picture they are expressed in.
struct StateVector {
    enum class Picture { diabatic, interaction };
    Vector amplitudes;
    Picture picture = Picture::diabatic;
    double t = 0.0;

    double norm2() const { return amplitudes.squaredNorm(); }
};

/// Matrix of transition probabilities P[m][n] = P(m -> n) with the maximum
/// deviation of row/column sums from one recorded as certificates.
struct TransitionMatrix {
    RealMatrix P;
    double residual_row = 0.0;
    double residual_col = 0.0;

    static TransitionMatrix from_probabilities(const RealMatrix& p);
};

/// H(t) at real or complex time. Throws SingularTime when t = 0 meets a
/// nonzero 1/t coefficient.
Matrix hamiltonian_at(const DiabaticModel& model, Complex t);

/// Adjacent gaps of the sorted spectrum at real time, any dimension.
std::vector<double> eigen_gap_real(const DiabaticModel& model, double t);

/// Instantaneous eigenvalues at real time, ascending.
std::vector<double> eigenvalues_real(const DiabaticModel& model, double t);

/// Two-level gap  dE = sqrt((H11-H22)^2 + 4 H12 H21)  continued along a
/// polyline of complex times. The branch is anchored at the first point
/// (positive real for real anchor) and followed by continuity; the result
/// holds the gap at the final point. Throws BranchAmbiguity if the polyline
/// passes within `branch_tol` of a gap closure.
Complex eigen_gap_complex(const DiabaticModel& model, const std::vector<Complex>& path,
                          double branch_tol = 1e-6);

/// Gap evaluated on one declared branch at a single point; sign_hint selects
/// continuity against a previous value (pass 0 for the principal branch).
Complex two_level_gap_raw(const DiabaticModel& model, Complex t);

} // namespace mlz
