#include "mlz/families.hpp"

#include <cmath>

namespace mlz {

namespace {
constexpr double kPi = 3.14159265358979323846;

void require_positive_slopes(double b1, double b2) {
    if (!(b1 > 0.0) || !(b2 > 0.0) || !(b1 + b2 > 0.0))
        throw DegenerateSlopes("three-state slopes left the nondegenerate domain");
}
} // namespace

SlopeMap SlopeMap::linear_b1(double beta1, double beta2) {
    SlopeMap m;
    m.b1 = [beta1](double tau) { return beta1 * tau; };
    m.db1 = [beta1](double) { return beta1; };
    m.b2 = [beta2](double) { return beta2; };
    m.db2 = [](double) { return 0.0; };
    return m;
}

SlopeMap SlopeMap::constant(double beta1, double beta2) {
    SlopeMap m;
    m.b1 = [beta1](double) { return beta1; };
    m.db1 = [](double) { return 0.0; };
    m.b2 = [beta2](double) { return beta2; };
    m.db2 = [](double) { return 0.0; };
    return m;
}

ThreeStateFamily::ThreeStateFamily(Complex g12, Complex g13, Complex g23, double eps0_,
                                   double beta1_, double beta2_)
    : gamma12(g12), gamma13(g13), gamma23(g23), eps0(eps0_), beta1(beta1_), beta2(beta2_),
      slopes(SlopeMap::linear_b1(beta1_, beta2_)) {
    if (!(beta1 > 0.0) || !(beta2 > 0.0))
        throw DegenerateSlopes("reference slopes must be positive");
}

double slope_b1(const ThreeStateFamily& fam, double tau) { return fam.slopes.b1(tau); }
double slope_b2(const ThreeStateFamily& fam, double tau) { return fam.slopes.b2(tau); }

DiabaticModel three_state_model(const ThreeStateFamily& fam, double tau) {
    const double b1 = fam.slopes.b1(tau), b2 = fam.slopes.b2(tau);
    require_positive_slopes(b1, b2);

    const Complex g12 = fam.gamma12 * std::sqrt(b1 / fam.beta1);
    const Complex g23 = fam.gamma23 * std::sqrt(b2 / fam.beta2);
    const Complex g13 = fam.gamma13 * std::sqrt((b1 + b2) / (fam.beta1 + fam.beta2));
    const double eps = fam.eps0 * std::sqrt(b1 * b2 / (b1 + b2));

    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = g12;
    a(1, 0) = std::conj(g12);
    a(0, 2) = g13;
    a(2, 0) = std::conj(g13);
    a(1, 2) = g23;
    a(2, 1) = std::conj(g23);
    a(1, 1) = eps;

    RealVector b(3);
    b << b1, 0.0, -b2;
    return DiabaticModel(b, a);
}

QuadraticPartner three_state_partner(const ThreeStateFamily& fam, double tau) {
    const double b1 = fam.slopes.b1(tau), b2 = fam.slopes.b2(tau);
    require_positive_slopes(b1, b2);
    const double db1 = fam.slopes.db1(tau), db2 = fam.slopes.db2(tau);

    QuadraticPartner p;
    p.Q = RealVector(3);
    p.Q << db1, 0.0, -db2;

    // Closed-form tau derivatives of the coupling matrix.
    const Complex dg12 = fam.gamma12 * db1 / (2.0 * std::sqrt(b1 * fam.beta1));
    const Complex dg23 = fam.gamma23 * db2 / (2.0 * std::sqrt(b2 * fam.beta2));
    const Complex dg13 =
        fam.gamma13 * (db1 + db2) / (2.0 * std::sqrt((b1 + b2) * (fam.beta1 + fam.beta2)));
    const double u = b1 * b2 / (b1 + b2);
    const double du = (b2 * b2 * db1 + b1 * b1 * db2) / ((b1 + b2) * (b1 + b2));
    const double deps = (u > 0.0 && fam.eps0 != 0.0) ? fam.eps0 * du / (2.0 * std::sqrt(u)) : 0.0;

    p.L = Matrix::Zero(3, 3);
    p.L(0, 1) = dg12;
    p.L(1, 0) = std::conj(dg12);
    p.L(0, 2) = dg13;
    p.L(2, 0) = std::conj(dg13);
    p.L(1, 2) = dg23;
    p.L(2, 1) = std::conj(dg23);
    p.L(1, 1) = deps;

    p.r2 = (b2 * db1 - b1 * db2) / (b1 * b2 * (b1 + b2));
    const Matrix a = three_state_model(fam, tau).A;
    p.D = 0.5 * p.r2 * (a * a);
    return p;
}

double triangle_area(const ThreeStateFamily& fam, double tau) {
    const double b1 = fam.slopes.b1(tau), b2 = fam.slopes.b2(tau);
    require_positive_slopes(b1, b2);
    const double eps = fam.eps0 * std::sqrt(b1 * b2 / (b1 + b2));
    return 0.5 * eps * eps * (1.0 / b1 + 1.0 / b2);
}

DiabaticModel demo_three_state(double b, double g, double eps) {
    if (!(b > 0.0)) throw DegenerateSlopes("demo_three_state: b must be positive");
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = a(1, 0) = g;
    a(1, 2) = a(2, 1) = g;
    a(1, 1) = eps / std::sqrt(2.0);
    RealVector bb(3);
    bb << b, 0.0, -b;
    return DiabaticModel(bb, a);
}

DiabaticModel reduced_two_state(double b, double g, double eps) {
    if (!(b > 0.0)) throw DegenerateSlopes("reduced_two_state: b must be positive");
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = eps;
    a(0, 1) = a(1, 0) = g;
    RealVector bb(2), kk(2), qq = RealVector::Zero(2);
    bb << 0.0, -b;
    kk << -g * g / b, 0.0;
    return DiabaticModel(qq, bb, a, kk);
}

ThreeStateFamily demo_family(double b, double g, double eps) {
    return ThreeStateFamily(g, 0.0, g, eps / std::sqrt(b), b, b);
}

std::pair<double, double> fast_amplitudes(const ThreeStateFamily& fam) {
    return {std::abs(fam.gamma12) / std::sqrt(fam.beta1),
            std::abs(fam.gamma13) / std::sqrt(fam.beta1 + fam.beta2)};
}

ReducedThreeState reduce_three_state(const ThreeStateFamily& fam) {
    const double scale = std::max({1.0, std::abs(fam.gamma12), std::abs(fam.gamma13),
                                   std::abs(fam.gamma23)});
    if (std::abs(std::imag(fam.gamma12)) > 1e-14 * scale ||
        std::abs(std::imag(fam.gamma13)) > 1e-14 * scale ||
        std::abs(std::imag(fam.gamma23)) > 1e-14 * scale)
        throw ComplexCouplingUnsupported("reduce_three_state: couplings must be real");

    auto [gt12, gt13] = fast_amplitudes(fam);
    if (std::real(fam.gamma12) < 0.0) gt12 = -gt12;
    if (std::real(fam.gamma13) < 0.0) gt13 = -gt13;
    const double gt2 = gt12 * gt12 + gt13 * gt13;

    ReducedThreeState red;
    if (gt2 == 0.0) {
        red.psi1 = Eigen::Vector2d(1.0, 0.0);
        red.psi2 = Eigen::Vector2d(0.0, 1.0);
        red.p_fast = 0.0;
    } else {
        const double norm = std::sqrt(gt2);
        red.psi1 = Eigen::Vector2d(gt12 / norm, gt13 / norm);
        red.psi2 = Eigen::Vector2d(gt13 / norm, -gt12 / norm);
        red.p_fast = 1.0 - std::exp(-2.0 * kPi * gt2);
    }

    // Effective model on {|2>,|3>} in the steep-slope limit: b2 frozen at its
    // reference value, couplings at their limits, middle energy from the area
    // rule, and the virtual-transition pole acting on |psi1>.
    const double eps_lim = fam.eps0 * std::sqrt(fam.beta2);
    const double g23 = std::real(fam.gamma23);

    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = eps_lim;
    a(0, 1) = a(1, 0) = g23;
    RealVector bb(2);
    bb << 0.0, -fam.beta2;

    RealVector kk = RealVector::Zero(2);
    Matrix frame;
    if (gt13 == 0.0) {
        kk(0) = -gt2;
    } else if (gt12 == 0.0) {
        kk(1) = -gt2;
    } else {
        kk(0) = -gt2;
        frame = Matrix::Zero(2, 2);
        frame.col(0) = red.psi1.cast<Complex>();
        frame.col(1) = red.psi2.cast<Complex>();
    }

    red.model = DiabaticModel(RealVector::Zero(2), bb, a, kk);
    if (frame.size() > 0) {
        red.model.coulomb_frame = frame;
        red.model.validate();
    }
    return red;
}

ComposedFromLevel1 compose_from_level1(double p_fast, double p_psi1_to_2, double p_psi1_to_3) {
    return {1.0 - p_fast, p_fast * p_psi1_to_2, p_fast * p_psi1_to_3};
}

DiabaticModel ChainSpec::to_model() const {
    Matrix a = Matrix::Zero(n_levels, n_levels);
    for (int i = 0; i + 1 < n_levels; ++i) a(i, i + 1) = a(i + 1, i) = couplings[i];
    return DiabaticModel(slopes, a);
}

ChainSpec bosonic_chain_sector(int n_max, double beta, double g) {
    if (n_max < 2) throw Error("bosonic_chain_sector: need at least two levels");
    ChainSpec c;
    c.n_levels = n_max;
    c.beta = beta;
    c.g_base = g;
    c.base_slopes = RealVector(n_max);
    c.base_couplings = RealVector(n_max - 1);
    for (int n = 0; n < n_max; ++n) c.base_slopes[n] = beta * n;
    for (int n = 0; n + 1 < n_max; ++n)
        c.base_couplings[n] = (g / std::sqrt(2.0)) * std::sqrt(double(n + 1) * double(n + 2));
    c.slopes = c.base_slopes;
    c.couplings = c.base_couplings;
    c.q = 1.0;
    return c;
}

ChainSpec q_deform(const ChainSpec& chain, double q) {
    ChainSpec c = chain;
    c.q = q;
    c.slopes = RealVector(chain.n_levels);
    c.couplings = RealVector(chain.n_levels - 1);
    for (int n = 0; n < chain.n_levels; ++n) {
        const double d1 = double(n) * (q - 1.0) - 1.0;
        const double d2 = double(n) * (q - 1.0) - q;
        if (std::abs(d1) < 1e-12 || std::abs(d2) < 1e-12)
            throw DeformationSingular("q_deform: slope denominator vanishes at n = " +
                                      std::to_string(n));
        c.slopes[n] = chain.base_slopes[n] / (double(n) * (1.0 - q) + q);
        if (n + 1 < chain.n_levels) {
            const double arg = q / (d1 * d2);
            if (!(arg > 0.0))
                throw DeformationSingular("q_deform: coupling factor nonpositive at n = " +
                                          std::to_string(n));
            c.couplings[n] = chain.base_couplings[n] * std::sqrt(arg);
        }
    }
    return c;
}

DiabaticModel four_state_model(const FourStateParams& p) {
    if (!(p.b > 0.0)) throw DegenerateSlopes("four_state_model: b must be positive");
    Matrix a = Matrix::Zero(4, 4);
    a(0, 1) = p.g1;
    a(1, 0) = std::conj(p.g1);
    a(0, 2) = p.g2;
    a(2, 0) = std::conj(p.g2);
    a(1, 3) = std::conj(p.g3);
    a(3, 1) = p.g3;
    a(2, 3) = std::conj(p.g4);
    a(3, 2) = p.g4;
    RealVector b(4);
    b << p.b, 0.0, 0.0, -p.b;
    DiabaticModel m(b, a);
    m.degenerate_allowed = true;
    return m;
}

double FourStateParams::kappa() const { return (std::norm(g1) + std::norm(g2)) / b; }

Complex FourStateParams::gamma1() const {
    const double w = std::sqrt(std::norm(g1) + std::norm(g2));
    return (g1 * std::conj(g3) + g2 * std::conj(g4)) / w;
}

Complex FourStateParams::gamma2() const {
    const double w = std::sqrt(std::norm(g1) + std::norm(g2));
    return (g2 * std::conj(g3) - g1 * std::conj(g4)) / w;
}

double FourStateParams::kappa_plus() const {
    return (std::norm(gamma1()) + std::norm(gamma2())) / b;
}

double FourStateParams::kappa_minus() const {
    return (std::norm(gamma1()) - std::norm(gamma2())) / b;
}

std::pair<double, double> FourStateParams::s_plus_minus() const {
    const double k = kappa(), kp = kappa_plus(), km = kappa_minus();
    const double arg = kp * kp + k * (k - 2.0 * km);
    if (arg < 0.0)
        throw ComplexExponents("s_plus_minus: square-root argument is negative");
    const double root = std::sqrt(arg);
    return {0.5 * (kp + k + root), 0.5 * (kp + k - root)};
}

DiabaticModel effective_coulomb_3state(const FourStateParams& p) {
    const double w2 = std::norm(p.g1) + std::norm(p.g2);
    if (w2 <= 0.0)
        throw DegenerateReduction("effective_coulomb_3state: g1 = g2 = 0");
    Matrix a = Matrix::Zero(3, 3);
    a(0, 2) = p.gamma1();
    a(2, 0) = std::conj(a(0, 2));
    a(1, 2) = p.gamma2();
    a(2, 1) = std::conj(a(1, 2));
    RealVector b(3), k(3), q = RealVector::Zero(3);
    b << 0.0, 0.0, -p.b;
    k << -p.kappa(), 0.0, 0.0;
    DiabaticModel m(q, b, a, k);
    m.degenerate_allowed = true;
    return m;
}

BipartiteSlopes bipartite_4slopes(double b, double b1, double r2, double tau) {
    const double e = std::exp(r2 * b * tau);
    const double den24 = b + b1 * (1.0 - e);
    const double den13 = b * (e - 2.0) + b1 * (e - 1.0);
    const double scale = std::abs(b) + std::abs(b1);
    if (std::abs(den24) < 1e-12 * scale || std::abs(den13) < 1e-12 * scale)
        throw DeformationSingular("bipartite_4slopes: slope denominator vanishes");
    BipartiteSlopes d;
    d.d34 = b;
    d.d24 = b * (b + b1) / den24;
    d.d13 = -b * (b + b1) * e / den13;
    d.d12 = -b * b * b * e / (den24 * den13);
    return d;
}

} // namespace mlz
