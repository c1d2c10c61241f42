#include "mlz/model.hpp"

#include <algorithm>
#include <cmath>

namespace mlz {

DiabaticModel::DiabaticModel(RealVector b, Matrix a) : B(std::move(b)), A(std::move(a)) {
    Q = RealVector::Zero(B.size());
    K = RealVector::Zero(B.size());
    validate();
}

DiabaticModel::DiabaticModel(RealVector q, RealVector b, Matrix a, RealVector k)
    : Q(std::move(q)), B(std::move(b)), A(std::move(a)), K(std::move(k)) {
    validate();
}

void DiabaticModel::validate() const {
    const int nn = n();
    if (A.rows() != nn || A.cols() != nn)
        throw Error("DiabaticModel: A must be n x n");
    if (Q.size() != nn || K.size() != nn)
        throw Error("DiabaticModel: Q, B, K must have equal length");
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.adjoint()).cwiseAbs().maxCoeff() > 1e-14 * scale)
        throw Error("DiabaticModel: A is not Hermitian");
    if (has_frame()) {
        if (coulomb_frame.rows() != nn || coulomb_frame.cols() != nn)
            throw Error("DiabaticModel: coulomb_frame must be n x n");
        Matrix I = Matrix::Identity(nn, nn);
        if ((coulomb_frame * coulomb_frame.adjoint() - I).cwiseAbs().maxCoeff() > 1e-12)
            throw Error("DiabaticModel: coulomb_frame is not unitary");
    }
}

Matrix DiabaticModel::coulomb_matrix() const {
    Matrix kd = K.cast<Complex>().asDiagonal();
    if (!has_frame()) return kd;
    return coulomb_frame * kd * coulomb_frame.adjoint();
}

Matrix hamiltonian_at(const DiabaticModel& model, Complex t) {
    const int n = model.n();
    Matrix h = model.A;
    for (int i = 0; i < n; ++i)
        h(i, i) += 0.5 * model.Q[i] * t * t + model.B[i] * t;
    if (model.has_coulomb()) {
        if (t == Complex(0.0, 0.0))
            throw SingularTime("hamiltonian_at: t = 0 with nonzero 1/t term");
        h += model.coulomb_matrix() / t;
    }
    return h;
}

std::vector<double> eigenvalues_real(const DiabaticModel& model, double t) {
    Matrix h = hamiltonian_at(model, Complex(t, 0.0));
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

std::vector<double> eigen_gap_real(const DiabaticModel& model, double t) {
    auto ev = eigenvalues_real(model, t);
    std::vector<double> gaps(ev.size() - 1);
    for (size_t i = 0; i + 1 < ev.size(); ++i) gaps[i] = ev[i + 1] - ev[i];
    return gaps;
}

Complex two_level_gap_raw(const DiabaticModel& model, Complex t) {
    Matrix h = hamiltonian_at(model, t);
    Complex d = h(0, 0) - h(1, 1);
    return std::sqrt(d * d + 4.0 * h(0, 1) * h(1, 0));
}

namespace {

// Continuity step: of the two branches +/-g, pick the one nearer `prev`.
Complex continue_branch(Complex g, Complex prev) {
    return (std::abs(g - prev) <= std::abs(g + prev)) ? g : -g;
}

} // namespace

Complex eigen_gap_complex(const DiabaticModel& model, const std::vector<Complex>& path,
                          double branch_tol) {
    if (model.n() != 2)
        throw Error("eigen_gap_complex: branch tracking is defined for two levels");
    if (path.empty())
        throw Error("eigen_gap_complex: empty path");

    Complex cur = two_level_gap_raw(model, path.front());
    if (std::imag(path.front()) == 0.0 && std::real(cur) < 0.0) cur = -cur;

    // Walk each segment with enough samples that consecutive gap values stay
    // close; refine locally until the continuity choice is unambiguous.
    for (size_t k = 0; k + 1 < path.size(); ++k) {
        const Complex a = path[k], b = path[k + 1];
        const int base = 64;
        Complex prev = cur;
        for (int i = 1; i <= base; ++i) {
            Complex t = a + (b - a) * (static_cast<double>(i) / base);
            Complex g = two_level_gap_raw(model, t);
            if (std::abs(g) < branch_tol)
                throw BranchAmbiguity("eigen_gap_complex: path passes within branch_tol of a degeneracy");
            // If the step jumped by more than the local magnitude, subdivide.
            Complex chosen = continue_branch(g, prev);
            if (std::abs(chosen - prev) > 0.5 * (std::abs(chosen) + std::abs(prev))) {
                Complex t0 = a + (b - a) * (static_cast<double>(i - 1) / base);
                const int fine = 64;
                Complex p = prev;
                for (int j = 1; j <= fine; ++j) {
                    Complex tt = t0 + (t - t0) * (static_cast<double>(j) / fine);
                    Complex gg = two_level_gap_raw(model, tt);
                    if (std::abs(gg) < branch_tol)
                        throw BranchAmbiguity("eigen_gap_complex: path passes within branch_tol of a degeneracy");
                    p = continue_branch(gg, p);
                }
                chosen = p;
            }
            prev = chosen;
        }
        cur = prev;
    }
    return cur;
}

TransitionMatrix TransitionMatrix::from_probabilities(const RealMatrix& p) {
    TransitionMatrix tm;
    tm.P = p;
    tm.residual_row = (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
    tm.residual_col = (p.colwise().sum().array() - 1.0).abs().maxCoeff();
    return tm;
}

} // namespace mlz
