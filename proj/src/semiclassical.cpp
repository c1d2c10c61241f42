#include "mlz/semiclassical.hpp"

#include <cmath>

namespace mlz {

namespace {

constexpr double kPi = 3.14159265358979323846;

double point_segment_distance(Complex p, Complex a, Complex b) {
    const Complex ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(p - a);
    double s = ((p.real() - a.real()) * ab.real() + (p.imag() - a.imag()) * ab.imag()) / len2;
    s = std::clamp(s, 0.0, 1.0);
    return std::abs(p - (a + s * ab));
}

// Of the two branches +/-g, keep the one continuous against a reference.
Complex align_branch(Complex g, Complex ref) {
    return (std::abs(g - ref) <= std::abs(g + ref)) ? g : -g;
}

// Integrand along the straight segment t0 -> t1 after the substitution
// s = 1 - (1-u)^2, which flattens the sqrt zero of the gap at the branch
// point. The branch is tracked on the rescaled gap h(u) = gap/(1-u), which
// stays away from zero all the way to the endpoint; the integrand is
// f(u) = h(u) w(u) with the smooth scalar weight w = 2 (1-u)^2 dt.
struct SegmentIntegrand {
    const DiabaticModel* model;
    Complex t0, dt;

    Complex h_raw(double u) const {
        const double s = 1.0 - (1.0 - u) * (1.0 - u);
        return two_level_gap_raw(*model, t0 + s * dt) / (1.0 - u);
    }

    Complex weight(double u) const { return 2.0 * (1.0 - u) * (1.0 - u) * dt; }

    // Simpson recursion on f = h w; ha/hb are branch-resolved h values.
    Complex integrate(double a, double b, Complex ha, Complex hb, double tol, int depth) const {
        const double m = 0.5 * (a + b);
        const Complex hm = align_branch(h_raw(m), 0.5 * (ha + hb));
        const Complex fa = ha * weight(a), fb = hb * weight(b), fm = hm * weight(m);
        const Complex whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const Complex hlm = align_branch(h_raw(lm), 0.5 * (ha + hm));
        const Complex hrm = align_branch(h_raw(rm), 0.5 * (hm + hb));
        const Complex flm = hlm * weight(lm), frm = hrm * weight(rm);
        const Complex left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const Complex right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const Complex err = left + right - whole;
        if (depth <= 0 || std::abs(err) < 15.0 * tol) return left + right + err / 15.0;
        return integrate(a, m, ha, hm, 0.5 * tol, depth - 1) +
               integrate(m, b, hm, hb, 0.5 * tol, depth - 1);
    }
};

} // namespace

std::pair<Complex, Complex> branch_points(double b, double g, double eps) {
    if (!(b > 0.0) || !(g > 0.0))
        throw Error("branch_points: b and g must be positive");
    const Complex i(0.0, 1.0);
    const Complex disc = std::sqrt(Complex(eps * eps, -4.0 * eps * g));
    const Complex t1 = (2.0 * i * g - eps + disc) / (2.0 * b);
    const Complex t2 = (2.0 * i * g - eps - disc) / (2.0 * b);
    return {t1, t2};
}

double dykhne_action(const DiabaticModel& two_level, double t0, Complex t1, double quad_tol,
                     double branch_tol, const std::vector<Complex>& avoid) {
    if (two_level.n() != 2)
        throw Error("dykhne_action: two-level model required");
    if (t1 == Complex(t0, 0.0)) return 0.0;
    if (!(t1.imag() > 0.0))
        throw Error("dykhne_action: target must lie in the upper half plane");
    for (Complex p : avoid)
        if (point_segment_distance(p, Complex(t0, 0.0), t1) < branch_tol)
            throw BranchAmbiguity("dykhne_action: segment passes within branch_tol of a root");

    SegmentIntegrand f{&two_level, Complex(t0, 0.0), t1 - Complex(t0, 0.0)};

    // Anchor the branch positive real at the real starting point, then
    // pre-walk a coarse polyline so continuity survives fast rotations.
    // The last node sits just short of u = 1, where h is still finite.
    const int cells = 64;
    const double u_last = 1.0 - 1.0 / 1024.0;
    std::vector<Complex> hu(cells + 1);
    hu[0] = f.h_raw(0.0);
    if (hu[0].real() < 0.0) hu[0] = -hu[0];
    auto u_of = [cells, u_last](int k) { return u_last * double(k) / cells; };
    for (int k = 1; k <= cells; ++k) hu[k] = align_branch(f.h_raw(u_of(k)), hu[k - 1]);

    Complex total = 0.0;
    const double cell_tol = quad_tol / (cells + 1);
    for (int k = 0; k < cells; ++k)
        total += f.integrate(u_of(k), u_of(k + 1), hu[k], hu[k + 1], cell_tol, 48);
    // tail [u_last, 1]: f = h w with w = O((1-u)^2); endpoint value is zero
    total += f.integrate(u_last, 1.0, hu[cells], hu[cells], cell_tol, 48);
    return total.imag();
}

DykhneResult dykhne_probability(double b, double g, double eps, double eta, double t0) {
    DykhneResult res;
    auto [t1, t2] = branch_points(b, g, eps);
    res.t1 = t1;
    res.t2 = t2;
    res.eta = eta;

    const DiabaticModel model = reduced_two_state(b, g, eps);
    const double scale = std::abs(t1) + std::abs(t2);
    if (std::abs(t1 - t2) < 1e-12 * std::max(1.0, scale)) {
        res.degenerate_roots = true;
        res.action = dykhne_action(model, t0, t1);
        res.selected = 0;
    } else {
        const double a1 = dykhne_action(model, t0, t1, 1e-10, 1e-8, {t2});
        const double a2 = dykhne_action(model, t0, t2, 1e-10, 1e-8, {t1});
        if (a1 <= a2) {
            res.action = a1;
            res.selected = 0;
        } else {
            res.action = a2;
            res.selected = 1;
        }
    }
    res.P = std::min(1.0, eta * std::exp(-2.0 * res.action));
    return res;
}

double p3_semiclassical(double b, double g, double eps, double eta) {
    if (!(eps > 0.0))
        throw Error("p3_semiclassical: eps must be positive");
    const DykhneResult d = dykhne_probability(b, g, eps, eta);
    return (1.0 - std::exp(-2.0 * kPi * g * g / b)) * d.P;
}

double be_survival(const std::vector<double>& gammas) {
    double s = 0.0;
    for (double g : gammas) s += g * g;
    return std::exp(-2.0 * kPi * s);
}

double p22_exact_eps0(double g, double b) {
    const double e = std::exp(-kPi * g * g / b);
    return 2.0 * e / (1.0 + e);
}

FourStateExact p14_exact(const FourStateParams& p) {
    const double k = p.kappa(), kp = p.kappa_plus();
    auto [sp, sm] = p.s_plus_minus();
    FourStateExact r;
    r.p_1to1 = std::exp(-2.0 * kPi * k);
    r.p_1to4 = std::exp(-kPi * (kp + k)) * std::expm1(kPi * sp) * std::expm1(kPi * sm);
    r.p_1todeg = 1.0 - r.p_1to1 - r.p_1to4;
    return r;
}

double avg_n_exact(double g, double beta) { return 2.0 * std::expm1(kPi * g * g / beta); }

} // namespace mlz
