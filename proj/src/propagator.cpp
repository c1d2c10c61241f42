#include "mlz/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace mlz {

namespace {

constexpr Complex kI{0.0, 1.0};

// ---------------------------------------------------------------------------
// Adaptive embedded Dormand-Prince 5(4) pair on complex state vectors.
// The phase-rate ceiling keeps h below 0.25/(1 + max coupled phase rate) so
// the fastest relative oscillation stays resolved.
// ---------------------------------------------------------------------------

using Rhs = std::function<void(double, const Vector&, Vector&)>;
using StepCeiling = std::function<double(double)>;

class Dopri5 {
public:
    Dopri5(int dim, double rel_tol, double abs_tol)
        : rel_(rel_tol), abs_(abs_tol) {
        for (Vector* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_})
            v->resize(dim);
    }

    long run(const Rhs& rhs, const StepCeiling& ceiling, double s0, double s1, Vector& y) {
        if (s1 == s0) return 0;
        if (s1 < s0) throw Error("Dopri5: segment must be ordered");

        double s = s0;
        rhs(s, y, k1_);
        double h = std::min({ceiling(s), s1 - s0, 0.1});
        long accepted = 0;

        while (s < s1) {
            h = std::min({h, ceiling(s), s1 - s});
            const double hmin = 1e-14 * std::max(1.0, std::abs(s));
            if (h < hmin)
                throw StepUnderflow("Dopri5: step size underflow at s = " + std::to_string(s));

            // stages
            ytmp_ = y + h * (a21 * k1_);
            rhs(s + c2 * h, ytmp_, k2_);
            ytmp_ = y + h * (a31 * k1_ + a32 * k2_);
            rhs(s + c3 * h, ytmp_, k3_);
            ytmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
            rhs(s + c4 * h, ytmp_, k4_);
            ytmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
            rhs(s + c5 * h, ytmp_, k5_);
            ytmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
            rhs(s + h, ytmp_, k6_);
            ynew_ = y + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
            rhs(s + h, ynew_, k7_);

            // scaled RMS error of the embedded 4th order difference
            double err2 = 0.0;
            const int dim = static_cast<int>(y.size());
            for (int i = 0; i < dim; ++i) {
                const Complex e = h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] +
                                       d6 * k6_[i] + d7 * k7_[i]);
                const double sc = abs_ + rel_ * std::max(std::abs(y[i]), std::abs(ynew_[i]));
                const double r = std::abs(e) / sc;
                err2 += r * r;
            }
            const double err = std::sqrt(err2 / dim);

            if (err <= 1.0) {
                s += h;
                y.swap(ynew_);
                k1_.swap(k7_);
                ++accepted;
                const double fac = (err == 0.0) ? 5.0
                                                : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
                h *= fac;
            } else {
                h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
            }
        }
        return accepted;
    }

private:
    // Dormand-Prince coefficients
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double d1 = 71.0 / 57600, d3 = -71.0 / 16695, d4 = 71.0 / 1920,
                            d5 = -17253.0 / 339200, d6 = 22.0 / 525, d7 = -1.0 / 40;

    double rel_, abs_;
    Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_;
};

// ---------------------------------------------------------------------------
// Interaction picture for one model: amplitudes carry e^{+i phi_n(t)} with
// phi_n = Q_n t^3/6 + B_n t^2/2 + A_nn t + K_n ln|t|, which strips the
// unbounded diagonal and leaves bounded oscillatory couplings.
// ---------------------------------------------------------------------------

struct PictureContext {
    int n = 0;
    RealVector Q, B, Adiag, Kt;
    Matrix C0; // offdiag(A)
    Matrix CK; // offdiag of the (possibly frame-conjugated) 1/t matrix
    bool has_k = false, has_ck = false;
    std::vector<std::pair<int, int>> coupled;
    std::vector<int> group_of; // levels with identical diagonal evolution
    int n_groups = 0;

    mutable Vector z, w, u;

    explicit PictureContext(const DiabaticModel& model) {
        n = model.n();
        Q = model.Q;
        B = model.B;
        Adiag = model.A.diagonal().real();
        C0 = model.A;
        C0.diagonal().setZero();

        Matrix kmat = model.coulomb_matrix();
        Kt = kmat.diagonal().real();
        CK = kmat;
        CK.diagonal().setZero();
        has_k = model.has_coulomb();
        has_ck = has_k && CK.cwiseAbs().maxCoeff() > 0.0;

        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (std::abs(C0(i, j)) > 0.0 || std::abs(CK(i, j)) > 0.0) {
                    if (Q[i] == Q[j] && B[i] == B[j])
                        throw DegenerateSlopes(
                            "propagate: coupled levels " + std::to_string(i + 1) + "," +
                            std::to_string(j + 1) + " have equal slopes");
                    coupled.emplace_back(i, j);
                }

        group_of.assign(n, -1);
        for (int i = 0; i < n; ++i) {
            if (group_of[i] >= 0) continue;
            group_of[i] = n_groups;
            for (int j = i + 1; j < n; ++j)
                if (Q[i] == Q[j] && B[i] == B[j] && Kt[i] == Kt[j]) group_of[j] = n_groups;
            ++n_groups;
        }

        z.resize(n);
        w.resize(n);
        u.resize(n);
    }

    RealVector group_sums(const RealVector& p) const {
        RealVector g = RealVector::Zero(n_groups);
        for (int i = 0; i < n; ++i) g[group_of[i]] += p[i];
        return g;
    }

    double phase(int i, double t) const {
        double p = t * (Adiag[i] + t * (0.5 * B[i] + t * Q[i] / 6.0));
        if (has_k && Kt[i] != 0.0) p += Kt[i] * std::log(std::abs(t));
        return p;
    }

    double rate(int i, double t) const {
        double r = Adiag[i] + t * (B[i] + 0.5 * Q[i] * t);
        if (has_k && Kt[i] != 0.0) r += Kt[i] / t;
        return r;
    }

    double max_coupled_rate(double t) const {
        double m = 0.0;
        for (auto [i, j] : coupled) m = std::max(m, std::abs(rate(i, t) - rate(j, t)));
        return m;
    }

    void rhs(double t, const Vector& y, Vector& dy) const {
        for (int i = 0; i < n; ++i) z[i] = std::polar(1.0, phase(i, t));
        w = z.conjugate().cwiseProduct(y);
        u.noalias() = C0 * w;
        if (has_ck) u.noalias() += (1.0 / t) * (CK * w);
        dy = (-kI) * z.cwiseProduct(u);
    }

    /// First-order wave operator W(t): (1 + W) maps in-window amplitudes onto
    /// their asymptotic values, removing the residual oscillatory tail
    /// ~ C/(dphi_rate * t) from readouts.
    Matrix wave_operator(double t) const {
        Matrix wop = Matrix::Zero(n, n);
        for (auto [i, j] : coupled) {
            const Complex cij = C0(i, j) + (has_ck ? CK(i, j) / t : Complex(0.0));
            const double dphase = phase(i, t) - phase(j, t);
            const double drate = rate(i, t) - rate(j, t);
            wop(i, j) = cij * std::polar(1.0, dphase) / drate;
            wop(j, i) = std::conj(cij) * std::polar(1.0, -dphase) / (-drate);
        }
        return wop;
    }

    Vector corrected(const Vector& y, double t) const { return y + wave_operator(t) * y; }
    Vector prepared(const Vector& y, double t) const { return y - wave_operator(t) * y; }
};

RealVector probabilities_of(const Vector& y, bool normalize) {
    RealVector p = y.cwiseAbs2();
    if (normalize) p /= p.sum();
    return p;
}

// One real-time window in the interaction picture, either direction.
long run_real_window(const PictureContext& ctx, Vector& y, double t_from, double t_to,
                     const ScatterConfig& cfg) {
    if (t_from == t_to) return 0;
    Dopri5 stepper(ctx.n, cfg.rel_tol, cfg.abs_tol);
    const bool no_coupling = ctx.coupled.empty();
    if (no_coupling) return 0; // picture amplitudes are constant

    if (t_to > t_from) {
        auto rhs = [&ctx](double t, const Vector& yy, Vector& dy) { ctx.rhs(t, yy, dy); };
        auto ceil = [&ctx](double t) { return 0.25 / (1.0 + ctx.max_coupled_rate(t)); };
        return stepper.run(rhs, ceil, t_from, t_to, y);
    }
    // integrate in u = -t
    auto rhs = [&ctx](double u, const Vector& yy, Vector& dy) {
        ctx.rhs(-u, yy, dy);
        dy = -dy;
    };
    auto ceil = [&ctx](double u) { return 0.25 / (1.0 + ctx.max_coupled_rate(-u)); };
    return stepper.run(rhs, ceil, -t_from, -t_to, y);
}

// The lower-half-plane semicircle t = rho e^{i theta}, theta: pi -> 2 pi,
// integrated in theta on the raw amplitudes (the 1/t term contributes a
// bounded constant to the theta-derivative).
long run_arc(const DiabaticModel& model, Vector& a, double rho, const ScatterConfig& cfg) {
    const int n = model.n();
    Dopri5 stepper(n, cfg.rel_tol, cfg.abs_tol);
    Matrix h(n, n);
    auto rhs = [&](double theta, const Vector& yy, Vector& dy) {
        const Complex t = std::polar(rho, theta);
        h = hamiltonian_at(model, t);
        dy.noalias() = (rho * std::polar(1.0, theta)) * (h * yy);
    };
    double gen_scale = model.K.cwiseAbs().maxCoeff() + model.A.cwiseAbs().maxCoeff() * rho + 1.0;
    auto ceil = [gen_scale](double) { return 0.25 / gen_scale; };
    constexpr double kPi = 3.14159265358979323846;
    return stepper.run(rhs, ceil, kPi, 2.0 * kPi, a);
}

struct AttemptResult {
    Vector y;        // picture amplitudes at t_max
    RealVector p_mid, p_end;
    double norm_drift = 0.0;
    long steps = 0;
};

// One full- or half-line pass at a given t_max with readouts at
// window_check * t_max and t_max.
AttemptResult attempt_run(const DiabaticModel& model, const PictureContext& ctx,
                          const Vector& init, const ScatterConfig& cfg, double t_max,
                          bool half_line) {
    AttemptResult res;
    const bool normalize = !ctx.has_k;
    const double t_check = cfg.window_check * t_max;
    Vector y = init;
    double drift = 0.0;
    auto track = [&](double before2, const Vector& yy) {
        drift = std::max(drift, std::abs(yy.squaredNorm() - before2));
    };

    if (half_line) {
        const double rho = cfg.effective_rho(model);
        double n2 = y.squaredNorm();
        res.steps += run_real_window(ctx, y, rho, t_check, cfg);
        res.p_mid = probabilities_of(ctx.corrected(y, t_check), normalize);
        res.steps += run_real_window(ctx, y, t_check, t_max, cfg);
        track(n2, y);
    } else {
        y = ctx.prepared(y, -t_max);
        if (ctx.has_k) {
            const double rho = cfg.effective_rho(model);
            double n2 = y.squaredNorm();
            res.steps += run_real_window(ctx, y, -t_max, -rho, cfg);
            track(n2, y);
            // picture -> raw, semicircle below t = 0, raw -> picture
            Vector a(ctx.n);
            for (int i = 0; i < ctx.n; ++i)
                a[i] = y[i] * std::polar(1.0, -ctx.phase(i, -rho));
            res.steps += run_arc(model, a, rho, cfg);
            for (int i = 0; i < ctx.n; ++i)
                y[i] = a[i] * std::polar(1.0, ctx.phase(i, rho));
            n2 = y.squaredNorm();
            res.steps += run_real_window(ctx, y, rho, t_check, cfg);
            res.p_mid = probabilities_of(ctx.corrected(y, t_check), false);
            res.steps += run_real_window(ctx, y, t_check, t_max, cfg);
            track(n2, y);
        } else {
            double n2 = y.squaredNorm();
            res.steps += run_real_window(ctx, y, -t_max, t_check, cfg);
            res.p_mid = probabilities_of(ctx.corrected(y, t_check), normalize);
            res.steps += run_real_window(ctx, y, t_check, t_max, cfg);
            track(n2, y);
        }
    }
    res.p_end = probabilities_of(ctx.corrected(y, t_max), normalize && !ctx.has_k);
    res.norm_drift = drift;
    res.y = std::move(y);
    return res;
}

ScatterResult scatter_impl(const DiabaticModel& model, const Vector& init,
                           const ScatterConfig& cfg, bool half_line) {
    model.validate();
    PictureContext ctx(model);
    if (half_line && !ctx.has_k)
        throw Error("propagate_coulomb_halfline: model has no 1/t term");

    ScatterResult out;
    double t_max = cfg.t_max;
    for (int pass = 0; pass < 2; ++pass) {
        AttemptResult att = attempt_run(model, ctx, init, cfg, t_max, half_line);
        const double dev =
            (ctx.group_sums(att.p_end) - ctx.group_sums(att.p_mid)).cwiseAbs().maxCoeff();
        const double tol = std::max(5e-4, 5.0 * cfg.rel_tol * t_max);
        out.probabilities = att.p_end;
        out.group_probabilities = ctx.group_sums(att.p_end);
        out.group_of = ctx.group_of;
        out.final_state = {att.y, StateVector::Picture::interaction, t_max};
        out.norm_drift = att.norm_drift;
        out.window_deviation = dev;
        out.t_max_used = t_max;
        out.window_ok = dev <= tol;
        out.steps += att.steps;
        if (out.window_ok) return out;
        t_max *= 2.0;
    }
    throw NotConverged("propagate: window consistency check failed after one t_max doubling "
                       "(deviation " +
                       std::to_string(out.window_deviation) + ")");
}

Vector basis_vector(int n, int level) {
    if (level < 0 || level >= n) throw Error("initial level out of range");
    Vector v = Vector::Zero(n);
    v[level] = 1.0;
    return v;
}

} // namespace

double ScatterConfig::effective_rho(const DiabaticModel& model) const {
    if (rho > 0.0) return rho;
    // 1e-4 keeps the start-at-rho bias below the 1e-4 rho-independence
    // budget; the cost near the pole only grows logarithmically.
    const double bmax = model.B.size() ? model.B.cwiseAbs().maxCoeff() : 0.0;
    return 1e-4 * std::min(1.0, bmax > 0.0 ? 1.0 / bmax : 1.0);
}

ScatterResult propagate_scattering(const DiabaticModel& model, int init_level,
                                   const ScatterConfig& cfg) {
    return scatter_impl(model, basis_vector(model.n(), init_level), cfg, false);
}

ScatterResult propagate_scattering(const DiabaticModel& model, const Vector& init,
                                   const ScatterConfig& cfg) {
    return scatter_impl(model, init, cfg, false);
}

ScatterResult propagate_coulomb_halfline(const DiabaticModel& model, int init_level,
                                         const ScatterConfig& cfg) {
    return scatter_impl(model, basis_vector(model.n(), init_level), cfg, true);
}

ScatterResult propagate_coulomb_halfline(const DiabaticModel& model, const Vector& init,
                                         const ScatterConfig& cfg) {
    return scatter_impl(model, init, cfg, true);
}

TransitionMatrix propagate_matrix(const DiabaticModel& model, const ScatterConfig& cfg) {
    const int n = model.n();
    RealMatrix p(n, n);
    for (int m = 0; m < n; ++m) {
        ScatterResult r = propagate_scattering(model, m, cfg);
        p.row(m) = r.probabilities.transpose();
    }
    return TransitionMatrix::from_probabilities(p);
}

StateVector propagate_window(const DiabaticModel& model, const StateVector& state, double t_to,
                             const ScatterConfig& cfg, long* steps) {
    PictureContext ctx(model);
    Vector y = state.amplitudes;
    if (state.picture == StateVector::Picture::diabatic)
        y = to_interaction_picture(model, y, state.t);
    long ns = run_real_window(ctx, y, state.t, t_to, cfg);
    if (steps) *steps = ns;
    return {y, StateVector::Picture::interaction, t_to};
}

double expectation_n(const StateVector& state) {
    double s = 0.0;
    for (int k = 0; k < state.amplitudes.size(); ++k)
        s += k * std::norm(state.amplitudes[k]);
    return s;
}

Vector to_interaction_picture(const DiabaticModel& model, const Vector& diabatic, double t) {
    PictureContext ctx(model);
    Vector y(model.n());
    for (int i = 0; i < model.n(); ++i)
        y[i] = diabatic[i] * std::polar(1.0, ctx.phase(i, t));
    return y;
}

Vector to_diabatic_picture(const DiabaticModel& model, const Vector& interaction, double t) {
    PictureContext ctx(model);
    Vector y(model.n());
    for (int i = 0; i < model.n(); ++i)
        y[i] = interaction[i] * std::polar(1.0, -ctx.phase(i, t));
    return y;
}

// ---------------------------------------------------------------------------
// Two-time evolution. Both leg types propagate amplitudes in the picture
// anchored to the phase field Phi_n(t, tau) = B_n(tau) t^2/2 + A_nn(tau) t,
// so no conversion is needed at segment junctions.
// ---------------------------------------------------------------------------

namespace {

struct TauLegContext {
    const ThreeStateFamily* fam;
    double t; // fixed time along the leg

    void eval_family(double tau, double& b1, double& b2, double& db1, double& db2) const {
        b1 = fam->slopes.b1(tau);
        b2 = fam->slopes.b2(tau);
        db1 = fam->slopes.db1(tau);
        db2 = fam->slopes.db2(tau);
        if (!(b1 > 0.0) || !(b2 > 0.0))
            throw DegenerateSlopes("two-time leg left the slope domain");
    }

    // chi_n(tau) = B_n(tau) t^2/2 + A_nn(tau) t
    void phases(double tau, double chi[3], double rate[3]) const {
        double b1, b2, db1, db2;
        eval_family(tau, b1, b2, db1, db2);
        const double u = b1 * b2 / (b1 + b2);
        const double du = (b2 * b2 * db1 + b1 * b1 * db2) / ((b1 + b2) * (b1 + b2));
        const double eps = fam->eps0 * std::sqrt(u);
        const double deps = (fam->eps0 != 0.0 && u > 0.0) ? fam->eps0 * du / (2.0 * std::sqrt(u))
                                                          : 0.0;
        chi[0] = 0.5 * b1 * t * t;
        chi[1] = eps * t;
        chi[2] = -0.5 * b2 * t * t;
        rate[0] = 0.5 * db1 * t * t;
        rate[1] = deps * t;
        rate[2] = -0.5 * db2 * t * t;
    }

    // residual generator R(tau) = offdiag(L) t + D  (D = r2/2 A^2),
    // spelled out on stack matrices to keep the inner loop allocation-free
    void residual(double tau, Eigen::Matrix3cd& r) const {
        double b1, b2, db1, db2;
        eval_family(tau, b1, b2, db1, db2);
        const double bs = b1 + b2, betas = fam->beta1 + fam->beta2;
        const Complex g12 = fam->gamma12 * std::sqrt(b1 / fam->beta1);
        const Complex g23 = fam->gamma23 * std::sqrt(b2 / fam->beta2);
        const Complex g13 = fam->gamma13 * std::sqrt(bs / betas);
        const double eps = fam->eps0 * std::sqrt(b1 * b2 / bs);

        Eigen::Matrix3cd a = Eigen::Matrix3cd::Zero();
        a(0, 1) = g12;
        a(1, 0) = std::conj(g12);
        a(0, 2) = g13;
        a(2, 0) = std::conj(g13);
        a(1, 2) = g23;
        a(2, 1) = std::conj(g23);
        a(1, 1) = eps;

        const double r2 = (b2 * db1 - b1 * db2) / (b1 * b2 * bs);
        r.noalias() = (0.5 * r2) * (a * a);

        const Complex dg12 = fam->gamma12 * db1 / (2.0 * std::sqrt(b1 * fam->beta1));
        const Complex dg23 = fam->gamma23 * db2 / (2.0 * std::sqrt(b2 * fam->beta2));
        const Complex dg13 = fam->gamma13 * (db1 + db2) / (2.0 * std::sqrt(bs * betas));
        r(0, 1) += dg12 * t;
        r(1, 0) += std::conj(dg12) * t;
        r(0, 2) += dg13 * t;
        r(2, 0) += std::conj(dg13) * t;
        r(1, 2) += dg23 * t;
        r(2, 1) += std::conj(dg23) * t;
    }

    void rhs(double tau, const Vector& y, Vector& dy) const {
        double chi[3], rt[3];
        phases(tau, chi, rt);
        Eigen::Matrix3cd r;
        residual(tau, r);
        Complex z[3], w[3];
        for (int i = 0; i < 3; ++i) {
            z[i] = std::polar(1.0, chi[i]);
            w[i] = std::conj(z[i]) * y[i];
        }
        for (int i = 0; i < 3; ++i) {
            Complex acc = 0.0;
            for (int j = 0; j < 3; ++j) acc += r(i, j) * w[j];
            dy[i] = -kI * z[i] * acc;
        }
    }

    double max_rate(double tau) const {
        double chi[3], rt[3];
        phases(tau, chi, rt);
        double m = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) m = std::max(m, std::abs(rt[i] - rt[j]));
        return m;
    }
};

long run_tau_leg(const ThreeStateFamily& fam, Vector& y, double tau_from, double tau_to,
                 double t_fixed, const ScatterConfig& cfg) {
    if (tau_from == tau_to) return 0;
    TauLegContext ctx{&fam, t_fixed};
    Dopri5 stepper(3, cfg.rel_tol, cfg.abs_tol);
    if (tau_to > tau_from) {
        auto rhs = [&ctx](double tau, const Vector& yy, Vector& dy) { ctx.rhs(tau, yy, dy); };
        auto ceil = [&ctx](double tau) { return 0.25 / (1.0 + ctx.max_rate(tau)); };
        return stepper.run(rhs, ceil, tau_from, tau_to, y);
    }
    auto rhs = [&ctx](double u, const Vector& yy, Vector& dy) {
        ctx.rhs(-u, yy, dy);
        dy = -dy;
    };
    auto ceil = [&ctx](double u) { return 0.25 / (1.0 + ctx.max_rate(-u)); };
    return stepper.run(rhs, ceil, -tau_from, -tau_to, y);
}

} // namespace

TwoTimeResult propagate_two_time(const ThreeStateFamily& fam, const TwoTimePath& path,
                                 const ScatterConfig& cfg) {
    if (path.segments.empty()) {
        TwoTimeResult r;
        r.U = Matrix::Identity(3, 3);
        return r;
    }
    // contiguity
    {
        const auto& s0 = path.segments.front();
        double t = (s0.vary == TwoTimeSegment::Vary::t) ? s0.from : s0.fixed;
        double tau = (s0.vary == TwoTimeSegment::Vary::t) ? s0.fixed : s0.from;
        for (const auto& seg : path.segments) {
            const bool vt = seg.vary == TwoTimeSegment::Vary::t;
            const double st = vt ? seg.from : seg.fixed;
            const double stau = vt ? seg.fixed : seg.from;
            if (st != t || stau != tau)
                throw Error("propagate_two_time: segments are not contiguous");
            if (vt) t = seg.to; else tau = seg.to;
        }
    }

    TwoTimeResult res;
    res.U = Matrix::Zero(3, 3);
    for (int col = 0; col < 3; ++col) {
        Vector y = Vector::Zero(3);
        y[col] = 1.0;
        for (const auto& seg : path.segments) {
            if (seg.vary == TwoTimeSegment::Vary::t) {
                DiabaticModel m = three_state_model(fam, seg.fixed);
                PictureContext ctx(m);
                res.steps += run_real_window(ctx, y, seg.from, seg.to, cfg);
            } else {
                res.steps += run_tau_leg(fam, y, seg.from, seg.to, seg.fixed, cfg);
            }
        }
        res.U.col(col) = y;
    }
    res.unitarity_residual =
        (res.U.adjoint() * res.U - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff();
    return res;
}

} // namespace mlz
