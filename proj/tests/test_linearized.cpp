#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "cqnls/linearized.hpp"
#include "oracles.hpp"

using namespace cqnls;

namespace {

struct Setup {
    GridPtr grid;
    GroundState gs;
    LinearizedOperators* ops;
    InternalMode mode;
};

Setup& setup() {
    static Setup s = [] {
        Setup t;
        t.grid = build_grid(90.0, 2200);
        t.gs = solve_ground_state(0.1, t.grid);
        t.ops = new LinearizedOperators(t.gs);
        t.mode = solve_internal_mode(*t.ops);
        return t;
    }();
    return s;
}

// dense eigenvalue oracle for the composed operator L_minus L_plus at n=400
double dense_internal_eigenvalue(double omega) {
    GridPtr g = build_grid(std::clamp(28.0 / std::sqrt(omega), 40.0, 260.0), 400);
    const GroundState gs = solve_ground_state(omega, g);
    LinearizedOperators ops(gs);
    const std::size_t n = g->n();
    std::vector<double> dp, dm;
    double off;
    ops.matrix(LSign::plus, dp, off);
    ops.matrix(LSign::minus, dm, off);
    Eigen::MatrixXd Ap = Eigen::MatrixXd::Zero((long)n, (long)n);
    Eigen::MatrixXd Am = Eigen::MatrixXd::Zero((long)n, (long)n);
    for (std::size_t i = 0; i < n; ++i) {
        Ap((long)i, (long)i) = dp[i];
        Am((long)i, (long)i) = dm[i];
        if (i + 1 < n) {
            Ap((long)i, (long)i + 1) = Ap((long)i + 1, (long)i) = off;
            Am((long)i, (long)i + 1) = Am((long)i + 1, (long)i) = off;
        }
    }
    const Eigen::MatrixXd P = Am * Ap;
    Eigen::EigenSolver<Eigen::MatrixXd> es(P, false);
    double most_negative = 0.0;
    for (long i = 0; i < es.eigenvalues().size(); ++i) {
        const auto ev = es.eigenvalues()[i];
        if (std::abs(ev.imag()) < 1e-8 && ev.real() < most_negative)
            most_negative = ev.real();
    }
    REQUIRE(most_negative < 0.0);
    return std::sqrt(-most_negative);
}

} // namespace

TEST_CASE("kernel identities of the linearized operators") {
    auto& s = setup();
    // L_minus Q = 0 at the Newton residual level
    const RadialField LmQ = s.ops->apply(LSign::minus, s.gs.Q);
    CHECK(std::sqrt(l2_norm_sq(LmQ) / l2_norm_sq(s.gs.Q)) < 1e-6 * s.gs.omega);

    // L_plus Q = -2Q^3 - 4Q^5
    RadialField expect(s.grid);
    for (std::size_t i = 0; i < s.grid->n(); ++i) {
        const double q = s.gs.Q[i].real();
        expect[i] = -2.0 * std::pow(q, 3) - 4.0 * std::pow(q, 5);
    }
    RadialField LpQ = s.ops->apply(LSign::plus, s.gs.Q);
    LpQ -= expect;
    CHECK(std::sqrt(l2_norm_sq(LpQ) / l2_norm_sq(expect)) < 1e-6);

    // linearity: L(0) = 0
    RadialField z(s.grid);
    CHECK(l2_norm_sq(s.ops->apply(LSign::plus, z)) == 0.0);

    // symmetry of both operators
    RadialField u = sample_field(s.grid, [](double r) { return std::exp(-0.3 * r * r); });
    RadialField w = sample_field(s.grid, [](double r) { return r * std::exp(-0.7 * r); });
    for (LSign sign : {LSign::plus, LSign::minus}) {
        const double a = l2_pairing(s.ops->apply(sign, u), w).real();
        const double b = l2_pairing(u, s.ops->apply(sign, w)).real();
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
    }
}

TEST_CASE("internal mode: eigen relations, normalization, signs") {
    auto& s = setup();
    const InternalMode& m = s.mode;
    CHECK(m.e_omega > 0.0);
    CHECK(m.e_omega < s.gs.omega); // below the essential spectrum edge
    CHECK(m.residual_plus < 1e-6);
    CHECK(m.residual_minus < 1e-6);
    CHECK(m.pairing > 0.0);
    CHECK(std::abs(2.0 * m.pairing - 1.0) < 1e-10);
    CHECK(m.signQ2 < 0.0);

    // composed-operator identity L- L+ Y1 = -e^2 Y1
    const RadialField t1 = s.ops->apply(LSign::plus, m.Y1);
    RadialField t2 = s.ops->apply(LSign::minus, t1);
    RadialField expect = m.Y1;
    expect *= cplx(-m.e_omega * m.e_omega);
    t2 -= expect;
    CHECK(std::sqrt(l2_norm_sq(t2)) / (m.e_omega * m.e_omega) < 1e-6);

    // orthogonality (Q, Y1) = 0
    const double nQ = std::sqrt(l2_norm_sq(s.gs.Q));
    const double nY1 = std::sqrt(l2_norm_sq(m.Y1));
    CHECK(std::abs(l2_pairing(s.gs.Q, m.Y1).real()) <= 1e-8 * nQ * nY1);

    // symplectic normalization Omega(Y+, Y-) = 1
    const double om = l2_pairing(m.Yplus(), m.Yminus()).imag();
    CHECK(om == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("iterative eigenvalue matches the dense oracle at n = 400") {
    const double omega = 0.1;
    const double e_dense = dense_internal_eigenvalue(omega);
    GridPtr g = build_grid(std::clamp(28.0 / std::sqrt(omega), 40.0, 260.0), 400);
    const GroundState gs = solve_ground_state(omega, g);
    LinearizedOperators ops(gs);
    const InternalMode m = solve_internal_mode(ops);
    CHECK(std::abs(m.e_omega - e_dense) / e_dense < 1e-6);
}

TEST_CASE("quadratic form matches the second difference of the action") {
    auto& s = setup();
    RadialField dir = sample_field(s.grid, [](double r) { return std::exp(-0.25 * r * r); });
    const double eps = 1e-4;

    // real direction -> <L+ h, h>
    RadialField up = s.gs.Q, um = s.gs.Q;
    RadialField d = dir;
    d *= cplx(eps);
    up += d;
    um -= d;
    const double S0 = evaluate(s.gs.Q, s.gs.omega).action;
    const double fd_re = (evaluate(up, s.gs.omega).action - 2.0 * S0 +
                          evaluate(um, s.gs.omega).action) / (eps * eps);
    const double qf_re = l2_pairing(s.ops->apply(LSign::plus, dir), dir).real();
    CHECK(std::abs(fd_re - qf_re) / std::abs(qf_re) < 1e-5);

    // imaginary direction -> <L- h, h>
    RadialField vp = s.gs.Q, vm = s.gs.Q;
    RadialField di = dir;
    di *= cplx(0, eps);
    vp += di;
    vm -= di;
    const double fd_im = (evaluate(vp, s.gs.omega).action - 2.0 * S0 +
                          evaluate(vm, s.gs.omega).action) / (eps * eps);
    const double qf_im = l2_pairing(s.ops->apply(LSign::minus, dir), dir).real();
    CHECK(std::abs(fd_im - qf_im) / std::abs(qf_im) < 1e-5);

    // quadratic_form of a complex field combines both
    RadialField mix(s.grid);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = cplx(1.0, 0.5) * dir[i];
    const double qf = s.ops->quadratic_form(mix);
    CHECK(qf == doctest::Approx(qf_re + 0.25 * qf_im).epsilon(1e-10));
}

TEST_CASE("L- has no spurious near-kernel besides Q in the radial sector") {
    auto& s = setup();
    // inverse iteration on L- converges to Q up to scale
    std::vector<double> x(s.grid->n(), 1.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::exp(-0.2 * s.grid->node(i));
    for (int it = 0; it < 30; ++it) {
        x = s.ops->solve_v(LSign::minus, x);
        double nn = std::sqrt(kernels::dot(x, x));
        for (double& v : x) v /= nn;
    }
    // compare with Q_v direction
    std::vector<double> qv(s.grid->n());
    for (std::size_t i = 0; i < qv.size(); ++i)
        qv[i] = s.grid->node(i) * s.gs.Q[i].real();
    const double cosang = std::abs(kernels::dot(x, qv)) /
                          std::sqrt(kernels::dot(qv, qv));
    CHECK(cosang == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("nonlinear remainder: zero, quadratic scaling, full consistency") {
    auto& s = setup();
    RadialField z(s.grid);
    CHECK(l2_norm_sq(nonlinear_remainder(*s.ops, z)) == 0.0);

    // quadratic leading order: halving eta divides ||N|| by ~4
    RadialField eta = sample_field(s.grid, [](double r) {
        return cplx(1.0, 0.4) * std::exp(-0.3 * r * r);
    });
    const double amp = 1e-3 / h1_norm(eta);
    eta *= cplx(amp);
    RadialField eta_half = eta;
    eta_half *= cplx(0.5);
    const double n1 = std::sqrt(l2_norm_sq(nonlinear_remainder(*s.ops, eta)));
    const double n2 = std::sqrt(l2_norm_sq(nonlinear_remainder(*s.ops, eta_half)));
    CHECK(n1 / n2 > 3.5);
    CHECK(n1 / n2 < 4.5);

    // full consistency: -iL eta + N(eta) equals the exact right-hand side
    // i Lap eta - i omega eta + i(|Q+eta|^2(Q+eta) + |Q+eta|^4(Q+eta) - Q^3 - Q^5)
    RadialField big = sample_field(s.grid, [](double r) {
        return cplx(0.2, -0.1) * std::exp(-0.4 * r * r) * (1 + 0.3 * r);
    });
    RadialField re(s.grid), im(s.grid);
    for (std::size_t i = 0; i < big.size(); ++i) {
        re[i] = big[i].real();
        im[i] = big[i].imag();
    }
    const RadialField Lre = s.ops->apply(LSign::plus, re);
    const RadialField Lim = s.ops->apply(LSign::minus, im);
    const RadialField N = nonlinear_remainder(*s.ops, big);
    const RadialField lap = apply_radial_laplacian(big);
    double max_rel = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < big.size(); ++i) {
        const cplx minus_iL(Lim[i].real(), -Lre[i].real()); // -i L eta
        const cplx lhs = minus_iL + N[i];
        const double q = s.gs.Q[i].real();
        const cplx w = q + big[i];
        const cplx full = std::norm(w) * w + std::norm(w) * std::norm(w) * w -
                          std::pow(q, 3) - std::pow(q, 5);
        const cplx rhs = cplx(0, 1) * (lap[i] - s.gs.omega * big[i] + full);
        scale = std::max(scale, std::abs(rhs));
        max_rel = std::max(max_rel, std::abs(lhs - rhs));
    }
    CHECK(max_rel <= 1e-10 * scale);
}

TEST_CASE("spectral inequality report at omega = 0.1") {
    auto& s = setup();
    const RadialField dQ = domega_Q(s.gs, s.grid);
    const SpectralReport rep = check_spectral_inequalities(s.mode, s.gs, &dQ);
    CHECK(rep.orth_Q_Y1_ok);
    CHECK(rep.orth_dQ_Y2_ok);
    CHECK(rep.pairing_positive);
    CHECK(rep.signQ2_negative);
    CHECK(rep.gap_ok); // holds at omega <= 0.1 per the acceptance criteria
}
