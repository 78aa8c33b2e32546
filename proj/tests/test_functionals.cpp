#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cqnls/functionals.hpp"
#include "oracles.hpp"

using namespace cqnls;

namespace {
GridPtr gauss_grid() { return build_grid(14.0, 2799); }
RadialField gaussian(const GridPtr& g) {
    return sample_field(g, [](double r) { return std::exp(-0.5 * r * r); });
}
} // namespace

TEST_CASE("evaluate on the Gaussian matches the closed forms") {
    GridPtr g = gauss_grid();
    const FunctionalValues f = evaluate(gaussian(g), 1.0);
    // M = pi^{3/2}/2, E = (3/4) pi^{3/2} - (pi/2)^{3/2}/4 - (pi/3)^{3/2}/6
    const double mass = 0.5 * oracle::gauss_l2_sq;
    const double energy =
        0.5 * oracle::gauss_grad_sq - 0.25 * oracle::gauss_l4_4 - oracle::gauss_l6_6 / 6.0;
    const double K = oracle::gauss_grad_sq - 0.75 * oracle::gauss_l4_4 - oracle::gauss_l6_6;
    CHECK(f.mass == doctest::Approx(mass).epsilon(1e-6));
    CHECK(f.energy == doctest::Approx(energy).epsilon(1e-5));
    CHECK(f.K == doctest::Approx(K).epsilon(1e-5));
    CHECK(f.action == doctest::Approx(6.2897).epsilon(1e-4));
    CHECK(f.J == doctest::Approx(3.3875).epsilon(1e-4));
    // spec'd approximations
    CHECK(f.mass == doctest::Approx(2.7842).epsilon(1e-4));
    CHECK(f.energy == doctest::Approx(3.5055).epsilon(1e-4));
    CHECK(f.K == doctest::Approx(5.8044).epsilon(1e-4));
}

TEST_CASE("internal identities hold for arbitrary fields") {
    GridPtr g = gauss_grid();
    RadialField u = sample_field(g, [](double r) {
        return cplx(std::exp(-0.3 * r * r), 0.4 * std::exp(-0.5 * r)) * (1.0 + 0.1 * std::sin(2 * r));
    });
    for (double w : {0.05, 0.7, 3.0}) {
        const FunctionalValues f = evaluate(u, w);
        CHECK(f.action == doctest::Approx(f.energy + w * f.mass).epsilon(1e-12));
        CHECK(f.J == doctest::Approx(f.action - 0.5 * f.K).epsilon(1e-12));
        const NormReport& n = f.norms;
        const double J_direct = 0.5 * w * n.l2_sq + n.l4_4 / 8.0 + n.l6_6 / 3.0;
        CHECK(f.J == doctest::Approx(J_direct).epsilon(1e-12));
    }
}

TEST_CASE("evaluate: zero field and NaN rejection") {
    GridPtr g = gauss_grid();
    RadialField z(g);
    const FunctionalValues f = evaluate(z, 1.0);
    CHECK(f.mass == 0.0);
    CHECK(f.energy == 0.0);
    CHECK(f.K == 0.0);
    CHECK(f.action == 0.0);
    RadialField bad(g);
    bad[3] = std::nan("");
    CHECK_THROWS_AS(evaluate(bad, 1.0), InputError);
}

TEST_CASE("scaling laws") {
    GridPtr g = gauss_grid();
    RadialField u = gaussian(g);
    const NormReport base = norms(u);

    // identity scaling
    RadialField same = scale(u, 1.0);
    CHECK(h1_distance(same, u) == 0.0);

    // mass invariance under resampling
    const double m0 = evaluate(u, 1.0).mass;
    for (double lam : {2.0, 3.0}) {
        const double m = evaluate(scale(u, lam), 1.0).mass;
        CHECK(std::abs(m - m0) / m0 < 1e-6);
    }

    // K(T_2 u) from the scaling laws and from the resampled field
    const double k2_law = 4.0 * oracle::gauss_grad_sq - 0.75 * 8.0 * oracle::gauss_l4_4 -
                          64.0 * oracle::gauss_l6_6;
    CHECK(k2_law == doctest::Approx(-46.98).epsilon(1e-3));
    CHECK(K_of_scaling(base, 2.0) == doctest::Approx(k2_law).epsilon(1e-5));
    CHECK(evaluate(scale(u, 2.0), 1.0).K == doctest::Approx(k2_law).epsilon(1e-4));

    // norm scaling of the resampled field
    const NormReport n2 = norms(scale(u, 2.0));
    CHECK(n2.grad_sq == doctest::Approx(4.0 * base.grad_sq).epsilon(1e-4));
    CHECK(n2.l4_4 == doctest::Approx(8.0 * base.l4_4).epsilon(1e-4));
    CHECK(n2.l6_6 == doctest::Approx(64.0 * base.l6_6).epsilon(1e-4));

    CHECK_THROWS_AS(scale(u, 0.0), InputError);
}

TEST_CASE("lambda_star: Gaussian root and group property") {
    GridPtr g = gauss_grid();
    RadialField u = gaussian(g);
    const double ls = lambda_star(u);
    // root of 8.3525 - 1.47653 lam - 1.0716 lam^4 (bisection oracle below)
    double lo = 1.0, hi = 2.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double K = oracle::gauss_grad_sq - 0.75 * mid * oracle::gauss_l4_4 -
                         mid * mid * mid * mid * oracle::gauss_l6_6;
        (K > 0 ? lo : hi) = mid;
    }
    CHECK(ls == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-5));
    CHECK(ls == doctest::Approx(1.543).epsilon(1e-3));

    // sign pattern around the root
    const NormReport base = norms(u);
    CHECK(K_of_scaling(base, 0.9 * ls) > 0);
    CHECK(K_of_scaling(base, 1.1 * ls) < 0);

    // K(T_lam u) has exactly one sign change on a lambda ladder
    int changes = 0;
    double prev = K_of_scaling(base, 1e-3);
    for (double lam = 2e-3; lam < 1e3; lam *= 1.1) {
        const double cur = K_of_scaling(base, lam);
        if (prev > 0 && cur <= 0) ++changes;
        if (prev <= 0 && cur > 0) ++changes;
        prev = cur;
    }
    CHECK(changes == 1);

    RadialField z(g);
    CHECK_THROWS_AS(lambda_star(z), InputError);
}

TEST_CASE("action gradient: zero field, finite-difference consistency") {
    GridPtr g = gauss_grid();
    RadialField z(g);
    const RadialField gz = action_gradient(z, 1.0);
    CHECK(l2_norm_sq(gz) == 0.0);

    RadialField u = gaussian(g);
    RadialField dir = sample_field(g, [](double r) { return r * std::exp(-r); });
    const double eps = 1e-5;
    RadialField up = u, um = u;
    RadialField d = dir;
    d *= cplx(eps);
    up += d;
    um -= d;
    const double fd = (evaluate(up, 1.0).action - evaluate(um, 1.0).action) / (2.0 * eps);
    const double an = l2_pairing(action_gradient(u, 1.0), dir).real();
    CHECK(std::abs(fd - an) / std::abs(an) < 1e-6);
}

TEST_CASE("K equals the scaling derivative of the action at lambda = 1") {
    GridPtr g = gauss_grid();
    RadialField u = gaussian(g);
    const NormReport base = norms(u);
    const double eps = 1e-6;
    auto S_of_lambda = [&](double lam) {
        // S(T_lam u) from the exact scaling laws of the base norms
        const double grad = lam * lam * base.grad_sq;
        const double l4 = lam * lam * lam * base.l4_4;
        const double l6 = lam * lam * lam * lam * lam * lam * base.l6_6;
        return 0.5 * grad - 0.25 * l4 - l6 / 6.0 + 1.0 * 0.5 * base.l2_sq;
    };
    const double fd = (S_of_lambda(1.0 + eps) - S_of_lambda(1.0 - eps)) / (2.0 * eps);
    CHECK(fd == doctest::Approx(evaluate(u, 1.0).K).epsilon(1e-8));
}

TEST_CASE("dist_to_orbit: orbit point, zero field, scan oracle") {
    GridPtr g = build_grid(14.0, 999);
    RadialField Q = sample_field(g, [](double r) { return 1.3 * std::exp(-0.4 * r * r); });

    for (double th : {0.0, 0.9, 2.8, -1.2}) {
        RadialField u = Q;
        u *= std::polar(1.0, th);
        CHECK(dist_to_orbit(u, Q) < 1e-10);
    }
    RadialField z(g);
    CHECK(dist_to_orbit(z, Q) == doctest::Approx(h1_norm(Q)).epsilon(1e-12));

    // phase invariance
    RadialField u = sample_field(g, [](double r) { return cplx(std::exp(-0.5 * r * r), 0.3 * std::exp(-r)); });
    const double d0 = dist_to_orbit(u, Q);
    RadialField v = u;
    v *= std::polar(1.0, 2.345);
    CHECK(dist_to_orbit(v, Q) == doctest::Approx(d0).epsilon(1e-13));

    // against the brute-force theta scan
    const double scan = oracle::dist_to_orbit_scan(u, Q, 10000);
    CHECK(std::abs(d0 - scan) < 1e-7 * (1.0 + scan));
}

TEST_CASE("h_minus1_norm is positive and monotone under scaling") {
    GridPtr g = build_grid(14.0, 999);
    RadialField r = sample_field(g, [](double rr) { return std::exp(-rr); });
    const double n1 = h_minus1_norm(r);
    CHECK(n1 > 0);
    RadialField r2 = r;
    r2 *= cplx(2.0);
    CHECK(h_minus1_norm(r2) == doctest::Approx(2.0 * n1).epsilon(1e-12));
    // H^{-1} norm is bounded by the L2 norm
    CHECK(n1 <= std::sqrt(l2_norm_sq(r)));
}
