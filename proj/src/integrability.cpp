#include "mlz/integrability.hpp"

#include <cmath>
#include <sstream>

#include "mlz/sweep.hpp"

namespace mlz {

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix commutator(const Matrix& x, const Matrix& y) { return x * y - y * x; }

struct FamilySnapshot {
    Matrix A;       // couplings + middle energy at tau
    RealVector B;   // slopes at tau
    Matrix L;       // dA/dtau
    RealVector Q;   // dB/dtau
    Matrix D;       // r2/2 A^2
};

FamilySnapshot snapshot(const ThreeStateFamily& fam, double tau) {
    FamilySnapshot s;
    DiabaticModel m = three_state_model(fam, tau);
    QuadraticPartner p = three_state_partner(fam, tau);
    s.A = m.A;
    s.B = m.B;
    s.L = p.L;
    s.Q = p.Q;
    s.D = p.D;
    return s;
}

// Snapshot with couplings and middle energy frozen at tau = 1 while the
// slopes still move; the partner recipe is applied as if nothing changed.
FamilySnapshot snapshot_broken(const ThreeStateFamily& fam, double tau) {
    FamilySnapshot s = snapshot(fam, tau);
    DiabaticModel ref = three_state_model(fam, 1.0);
    s.A = ref.A;
    s.L = Matrix::Zero(3, 3);
    QuadraticPartner p = three_state_partner(fam, tau);
    s.D = 0.5 * p.r2 * (s.A * s.A);
    return s;
}

ResidualReport curvature_from_snapshots(
    const std::function<FamilySnapshot(double)>& snap, const std::vector<double>& tau_grid,
    const std::vector<double>& t_grid) {
    ResidualReport rep;
    for (double tau : tau_grid) {
        FamilySnapshot s = snap(tau);
        const Matrix bdiag = s.B.cast<Complex>().asDiagonal();
        const Matrix qdiag = s.Q.cast<Complex>().asDiagonal();
        rep.cond_slope_coupling = std::max(
            rep.cond_slope_coupling, max_abs(0.5 * commutator(qdiag, s.A) + commutator(s.L, bdiag)));
        rep.cond_coupling_d =
            std::max(rep.cond_coupling_d, max_abs(commutator(s.L, s.A) + commutator(s.D, bdiag)));
        rep.cond_commuting_d = std::max(rep.cond_commuting_d, max_abs(commutator(s.A, s.D)));
        for (double t : t_grid) {
            const Matrix h = bdiag * t + s.A;
            const Matrix hp = 0.5 * t * t * qdiag + s.L * t + s.D;
            const Matrix dh_dtau = qdiag * t + s.L;   // closed form
            const Matrix dhp_dt = qdiag * t + s.L;
            rep.max_flatness = std::max(rep.max_flatness, max_abs(dh_dtau - dhp_dt));
            rep.max_commutator = std::max(rep.max_commutator, max_abs(commutator(h, hp)));
        }
    }
    std::ostringstream os;
    os << tau_grid.size() << " tau points x " << t_grid.size() << " t points";
    rep.grid = os.str();
    return rep;
}

} // namespace

ResidualReport check_zero_curvature(const ThreeStateFamily& fam,
                                    const std::vector<double>& tau_grid,
                                    const std::vector<double>& t_grid) {
    return curvature_from_snapshots([&fam](double tau) { return snapshot(fam, tau); }, tau_grid,
                                    t_grid);
}

ResidualReport check_zero_curvature_broken(const ThreeStateFamily& fam,
                                           const std::vector<double>& tau_grid,
                                           const std::vector<double>& t_grid) {
    return curvature_from_snapshots([&fam](double tau) { return snapshot_broken(fam, tau); },
                                    tau_grid, t_grid);
}

ResidualReport check_mlz_conditions(const MatrixFn& B, const MatrixFn& A, const MatrixFn& D,
                                    const std::vector<double>& tau_grid, double h) {
    ResidualReport rep;
    auto d4 = [h](const MatrixFn& f, double tau) -> Matrix {
        // 4th-order central stencil
        return (-f(tau + 2 * h) + 8.0 * f(tau + h) - 8.0 * f(tau - h) + f(tau - 2 * h)) /
               (12.0 * h);
    };
    for (double tau : tau_grid) {
        const Matrix a = A(tau), b = B(tau), d = D(tau);
        const Matrix da = d4(A, tau), db = d4(B, tau);
        rep.cond_slope_coupling =
            std::max(rep.cond_slope_coupling, max_abs(0.5 * commutator(db, a) + commutator(da, b)));
        rep.cond_coupling_d =
            std::max(rep.cond_coupling_d, max_abs(commutator(da, a) + commutator(d, b)));
        rep.cond_commuting_d = std::max(rep.cond_commuting_d, max_abs(commutator(a, d)));
    }
    std::ostringstream os;
    os << tau_grid.size() << " tau points, stencil h = " << h;
    rep.grid = os.str();
    return rep;
}

ChainDeformationPath chain_deformation_path(const ChainSpec& base, double r) {
    // q(tau) = e^{beta r tau}; tau = 0 is the undeformed chain.
    const double beta = base.beta;
    auto at = [base, beta, r](double tau) { return q_deform(base, std::exp(beta * r * tau)); };
    ChainDeformationPath path;
    path.B = [at](double tau) -> Matrix {
        return at(tau).slopes.cast<Complex>().asDiagonal();
    };
    path.A = [at](double tau) -> Matrix { return at(tau).to_model().A; };
    path.D = [at, r](double tau) -> Matrix {
        const Matrix a = at(tau).to_model().A;
        return 0.5 * r * (a * a);
    };
    return path;
}

namespace {

InvarianceSweepResult sweep_impl(const ThreeStateFamily& fam, const std::vector<double>& tau_values,
                                 const ScatterConfig& cfg, int threads, bool frozen_eps) {
    const int nv = static_cast<int>(tau_values.size());
    const double eps_ref =
        fam.eps0 * std::sqrt(fam.beta1 * fam.beta2 / (fam.beta1 + fam.beta2));

    struct Row {
        RealVector p;
        double drift = 0.0;
    };
    // one task per (tau, initial level) for balance on small thread counts
    auto rows = sweep_map<Row>(
        nv * 3,
        [&](int idx) {
            const int iv = idx / 3, m = idx % 3;
            DiabaticModel model = three_state_model(fam, tau_values[iv]);
            if (frozen_eps) {
                Matrix a = model.A;
                a(1, 1) = eps_ref;
                model = DiabaticModel(model.B, a);
            }
            ScatterResult r = propagate_scattering(model, m, cfg);
            return Row{r.probabilities, r.norm_drift};
        },
        threads);

    InvarianceSweepResult out;
    out.tau_values = tau_values;
    out.matrices.resize(nv);
    for (int iv = 0; iv < nv; ++iv) {
        RealMatrix p(3, 3);
        for (int m = 0; m < 3; ++m) {
            p.row(m) = rows[iv * 3 + m].p.transpose();
            out.max_norm_drift = std::max(out.max_norm_drift, rows[iv * 3 + m].drift);
        }
        out.matrices[iv] = TransitionMatrix::from_probabilities(p);
        out.max_stochastic_residual =
            std::max({out.max_stochastic_residual, out.matrices[iv].residual_row,
                      out.matrices[iv].residual_col});
    }

    int ref = 0;
    for (int iv = 0; iv < nv; ++iv)
        if (tau_values[iv] == 1.0) ref = iv;
    for (int iv = 0; iv < nv; ++iv) {
        const double dev =
            (out.matrices[iv].P - out.matrices[ref].P).cwiseAbs().maxCoeff();
        out.max_deviation = std::max(out.max_deviation, dev);
    }
    return out;
}

} // namespace

InvarianceSweepResult invariance_sweep(const ThreeStateFamily& fam,
                                       const std::vector<double>& tau_values,
                                       const ScatterConfig& cfg, int threads) {
    return sweep_impl(fam, tau_values, cfg, threads, false);
}

InvarianceSweepResult invariance_sweep_broken_eps(const ThreeStateFamily& fam,
                                                  const std::vector<double>& tau_values,
                                                  const ScatterConfig& cfg, int threads) {
    return sweep_impl(fam, tau_values, cfg, threads, true);
}

} // namespace mlz
