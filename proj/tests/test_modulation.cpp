#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cqnls/modulation.hpp"
#include "cqnls/special.hpp"
#include "oracles.hpp"

using namespace cqnls;

namespace {

struct Setup {
    GridPtr grid;
    GroundState gs;
    LinearizedOperators* ops;
    InternalMode mode;
    RadialField dQ;
};

Setup& setup() {
    static Setup s = [] {
        Setup t;
        t.grid = build_grid(130.0, 2600);
        t.gs = solve_ground_state(0.05, t.grid);
        t.ops = new LinearizedOperators(t.gs);
        t.mode = solve_internal_mode(*t.ops);
        t.dQ = domega_Q(t.gs, t.grid);
        return t;
    }();
    return s;
}

} // namespace

TEST_CASE("symplectic form: antisymmetry, Omega(u,iu), mode normalization") {
    auto& s = setup();
    RadialField u = sample_field(s.grid, [](double r) {
        return cplx(std::exp(-0.5 * r * r), 0.3 * std::exp(-r));
    });
    CHECK(symplectic_form(u, u) == doctest::Approx(0.0).epsilon(1e-14));

    RadialField iu = u;
    iu *= cplx(0, 1);
    CHECK(symplectic_form(u, iu) == doctest::Approx(-l2_norm_sq(u)).epsilon(1e-12));

    // Gaussian value -pi^{3/2}
    GridPtr gg = build_grid(14.0, 2799);
    RadialField gauss = sample_field(gg, [](double r) { return std::exp(-0.5 * r * r); });
    RadialField igauss = gauss;
    igauss *= cplx(0, 1);
    CHECK(symplectic_form(gauss, igauss) == doctest::Approx(-5.5683).epsilon(1e-4));

    CHECK(symplectic_form(s.mode.Yplus(), s.mode.Yminus()) ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(symplectic_form(s.mode.Yminus(), s.mode.Yplus()) ==
          doctest::Approx(-1.0).epsilon(1e-10));

    // antisymmetry on a random pair
    RadialField v = sample_field(s.grid, [](double r) {
        return cplx(0.2 * std::exp(-0.3 * r), std::exp(-0.6 * r * r));
    });
    CHECK(symplectic_form(u, v) == doctest::Approx(-symplectic_form(v, u)).epsilon(1e-12));
}

TEST_CASE("gauge fixing: orbit points, first-order phase, degenerate input") {
    auto& s = setup();
    for (double alpha : {0.0, 0.8, -2.5}) {
        RadialField psi = s.gs.Q;
        psi *= std::polar(1.0, alpha);
        const double th = fix_gauge(psi, s.dQ);
        CHECK(std::abs(std::remainder(th - alpha, 2 * oracle::pi)) < 1e-10);
        // postcondition: symplectic pairing vanishes, real pairing negative
        RadialField rot = psi;
        rot *= std::polar(1.0, -th);
        CHECK(std::abs(symplectic_form(rot, s.dQ)) <=
              1e-10 * std::sqrt(l2_norm_sq(psi) * l2_norm_sq(s.dQ)));
        CHECK(l2_pairing(rot, s.dQ).real() < 0.0);
    }

    // psi = e^{i a}(Q + i eps Q): theta = a + eps + O(eps^2)
    const double alpha = 0.4, eps = 1e-4;
    RadialField psi = s.gs.Q;
    for (std::size_t i = 0; i < psi.size(); ++i)
        psi[i] = std::polar(1.0, alpha) * (s.gs.Q[i] + cplx(0, eps) * s.gs.Q[i]);
    const double th = fix_gauge(psi, s.dQ);
    CHECK(std::abs(th - (alpha + eps)) < 10 * eps * eps);

    // degenerate: psi orthogonal to dQ
    RadialField bad(s.grid);
    CHECK_THROWS_AS(fix_gauge(bad, s.dQ), GaugeDegenerateError);
}

TEST_CASE("decompose an exact orbit point") {
    auto& s = setup();
    RadialField psi = s.gs.Q;
    psi *= std::polar(1.0, 1.1);
    const ModulationState st = decompose(psi, s.gs, s.mode, s.dQ, *s.ops);
    CHECK(std::abs(st.lambda_plus) < 1e-9);
    CHECK(std::abs(st.lambda_minus) < 1e-9);
    CHECK(std::abs(st.b) < 1e-7);
    CHECK(h1_norm(st.Gamma) < 1e-7);
    CHECK(st.d_omega < 1e-6);

    // reconstruction
    RadialField rec = reconstruct(st, s.gs, s.mode, s.dQ);
    rec -= psi;
    CHECK(std::sqrt(l2_norm_sq(rec) / l2_norm_sq(psi)) < 1e-10);
}

TEST_CASE("decompose detects the stable-direction content") {
    auto& s = setup();
    const double eps = 1e-3;
    RadialField pert = s.gs.Q;
    RadialField ym = s.mode.Yminus();
    ym *= cplx(eps);
    pert += ym;
    const RadialField psi0 = threshold_projection(pert, s.gs);
    RadialField psi = psi0;
    psi *= std::polar(1.0, 0.3);
    const ModulationState st = decompose(psi, s.gs, s.mode, s.dQ, *s.ops);
    CHECK(std::abs(st.lambda_plus) < 10 * eps * eps);
    CHECK(st.lambda_minus == doctest::Approx(eps).epsilon(0.02));

    // all four orthogonality constraints of the residual
    RadialField iQ = s.gs.Q;
    iQ *= cplx(0, 1);
    const double sc = std::sqrt(l2_norm_sq(st.Gamma)) + 1e-300;
    CHECK(std::abs(symplectic_form(st.Gamma, s.mode.Yplus())) <=
          1e-8 * sc * std::sqrt(l2_norm_sq(s.mode.Yplus())));
    CHECK(std::abs(symplectic_form(st.Gamma, s.mode.Yminus())) <=
          1e-8 * sc * std::sqrt(l2_norm_sq(s.mode.Yminus())));
    CHECK(std::abs(symplectic_form(st.Gamma, iQ)) <= 1e-8 * sc * std::sqrt(l2_norm_sq(iQ)));
    CHECK(std::abs(symplectic_form(st.Gamma, s.dQ)) <= 1e-8 * sc * std::sqrt(l2_norm_sq(s.dQ)));

    // gauge kills the dQ symplectic coefficient on eta as well
    CHECK(std::abs(symplectic_form(st.eta, s.dQ)) <=
          1e-8 * std::sqrt(l2_norm_sq(st.eta) * l2_norm_sq(s.dQ)));

    // energy norm recomputes from parts
    const double en2 = 0.5 * s.mode.e_omega *
                           (st.lambda_plus * st.lambda_plus +
                            st.lambda_minus * st.lambda_minus) +
                       0.5 * st.quad_form;
    CHECK(st.energy_norm * st.energy_norm == doctest::Approx(en2).epsilon(1e-12));

    // lambda1/lambda2 definitions
    CHECK(st.lambda1 == doctest::Approx(0.5 * (st.lambda_plus + st.lambda_minus)).epsilon(1e-14));
    CHECK(st.lambda2 == doctest::Approx(0.5 * (st.lambda_plus - st.lambda_minus)).epsilon(1e-14));

    // reconstruction at perturbed data
    RadialField rec = reconstruct(st, s.gs, s.mode, s.dQ);
    rec -= psi;
    CHECK(std::sqrt(l2_norm_sq(rec) / l2_norm_sq(psi)) < 1e-10);
}

TEST_CASE("distance identity on mass/energy matched data") {
    auto& s = setup();
    const double EQ = evaluate(s.gs.Q, s.gs.omega).energy;
    for (double eps : {1e-3, 5e-3}) {
        RadialField pert = s.gs.Q;
        RadialField ym = s.mode.Yminus();
        ym *= cplx(eps);
        pert += ym;
        const RadialField psi = threshold_projection(pert, s.gs);
        const ModulationState st = decompose(psi, s.gs, s.mode, s.dQ, *s.ops);
        const double lhs = st.d_omega * st.d_omega;
        const double rhs = st.energy_psi - EQ +
                           2.0 * s.mode.e_omega * st.lambda1 * st.lambda1;
        CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(lhs, 1e-12));
    }
}

TEST_CASE("mass mismatch is rejected with guidance") {
    auto& s = setup();
    RadialField psi = s.gs.Q;
    psi *= cplx(1.001);
    CHECK_THROWS_AS(decompose(psi, s.gs, s.mode, s.dQ, *s.ops), UsageError);
}

TEST_CASE("expansion check: degenerate guard, smallness, linear scaling") {
    auto& s = setup();
    // exact orbit: guarded ratio 0
    RadialField psi = s.gs.Q;
    const ModulationState st0 = decompose(psi, s.gs, s.mode, s.dQ, *s.ops);
    if (st0.energy_norm < 1e-12) CHECK(energy_norm_expansion_check(st0) == 0.0);

    std::vector<double> ens, ratios;
    for (double eps : {2e-4, 4e-4, 8e-4, 1.6e-3, 3.2e-3}) {
        RadialField pert = s.gs.Q;
        RadialField ym = s.mode.Yminus();
        ym *= cplx(eps);
        pert += ym;
        const RadialField p = threshold_projection(pert, s.gs);
        const ModulationState st = decompose(p, s.gs, s.mode, s.dQ, *s.ops);
        ens.push_back(std::log(st.energy_norm));
        ratios.push_back(std::log(std::max(energy_norm_expansion_check(st), 1e-300)));
        if (st.energy_norm <= 1e-3) CHECK(energy_norm_expansion_check(st) <= 0.1);
    }
    // cubic remainder: ratio scales linearly with the energy norm
    const double slope = oracle::ls_slope(ens, ratios);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.35));
}

TEST_CASE("energy norm is equivalent to H1 on a perturbation family") {
    auto& s = setup();
    double cmin = 1e300, cmax = 0;
    for (double eps : {1e-4, 1e-3, 1e-2, 5e-2}) {
        RadialField pert = s.gs.Q;
        RadialField dir = s.mode.Yminus();
        RadialField g2 = sample_field(s.grid, [](double r) { return 0.5 * std::exp(-0.3 * r * r); });
        dir += g2;
        dir *= cplx(eps / h1_norm(dir));
        pert += dir;
        const RadialField p = threshold_projection(pert, s.gs);
        const ModulationState st = decompose(p, s.gs, s.mode, s.dQ, *s.ops);
        const double h1 = h1_norm(st.eta);
        if (h1 < 1e-12) continue;
        const double ratio = st.energy_norm / h1;
        cmin = std::min(cmin, ratio);
        cmax = std::max(cmax, ratio);
        // coercivity of the quadratic form on the constrained residual
        RadialField Gfull = st.Gamma;
        for (std::size_t i = 0; i < Gfull.size(); ++i) Gfull[i] += st.b * s.dQ[i];
        const double gh1 = h1_norm(Gfull);
        if (gh1 > 1e-10) {
            CHECK(st.quad_form > 0.0);
            CHECK(st.quad_form / (gh1 * gh1) > 1e-3);
            CHECK(st.quad_form / (gh1 * gh1) < 1e3);
        }
    }
    CHECK(cmin > 0.05);
    CHECK(cmax / cmin < 20.0);
}

TEST_CASE("one-pass monitor verdicts") {
    CHECK_THROWS_AS(one_pass_monitor({}, 0.1), InputError);
    const std::vector<double> zeros(16, 0.0);
    CHECK(one_pass_monitor(zeros, 0.1) == OnePassVerdict::Stayed);

    std::vector<double> grow;
    for (int i = 0; i < 40; ++i) grow.push_back(0.02 * std::exp(0.2 * i));
    CHECK(one_pass_monitor(grow, 0.1) == OnePassVerdict::Exited);

    std::vector<double> comeback = grow;
    comeback.push_back(0.05); // drops back below R after exiting
    CHECK(one_pass_monitor(comeback, 0.1) == OnePassVerdict::ReturnViolation);

    // hovering between R and the exit level after exceeding it is fine
    std::vector<double> hover = {0.0, 0.2, 0.12, 0.15, 0.11};
    CHECK(one_pass_monitor(hover, 0.1) == OnePassVerdict::Exited);
}

TEST_CASE("modified distance interpolates between the two regimes") {
    std::vector<double> d = {0.01, 0.02, 0.04, std::nan(""), std::nan("")};
    std::vector<double> dist = {0.02, 0.04, 0.08, 0.5, 1.0};
    const std::vector<double> dt = modified_distance(d, dist, 0.05);
    CHECK(dt[0] == 0.01);
    CHECK(dt[1] == 0.02);
    // beyond the switch: rescaled by the median ratio (= 0.5)
    CHECK(dt[3] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(dt[4] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("chi cutoff shape") {
    CHECK(chi_cutoff(0.3) == 1.0);
    CHECK(chi_cutoff(1.0) == 1.0);
    CHECK(chi_cutoff(2.0) == 0.0);
    CHECK(chi_cutoff(5.0) == 0.0);
    double prev = 1.0;
    for (double x = 1.0; x <= 2.0; x += 0.01) {
        const double v = chi_cutoff(x);
        CHECK(v <= prev + 1e-14); // non-increasing
        prev = v;
    }
    // C^1 at the seams
    const double h = 1e-6;
    CHECK(std::abs((chi_cutoff(1.0 + h) - chi_cutoff(1.0 - h)) / (2 * h)) < 1e-4);
    CHECK(std::abs((chi_cutoff(2.0 + h) - chi_cutoff(2.0 - h)) / (2 * h)) < 1e-4);
}
