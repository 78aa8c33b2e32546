#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cqnls/kernels.hpp"

using namespace cqnls;
namespace k = cqnls::kernels;
using k::cplx;

namespace {
std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}
} // namespace

TEST_CASE("serial and openmp reductions agree bitwise") {
    for (std::size_t n : {1ul, 7ul, 4096ul, 4097ul, 100001ul}) {
        const auto a = random_vec(n, 11 + n);
        const auto b = random_vec(n, 77 + n);
        k::set_backend(k::Backend::serial);
        const double s1 = k::sum(a);
        const double d1 = k::dot(a, b);
        const double w1 = k::weighted_sum(a, b);
        k::set_backend(k::Backend::openmp);
        const double s2 = k::sum(a);
        const double d2 = k::dot(a, b);
        const double w2 = k::weighted_sum(a, b);
        CHECK(s1 == s2);
        CHECK(d1 == d2);
        CHECK(w1 == w2);
    }
    k::set_backend(k::Backend::openmp);
}

TEST_CASE("complex reductions and powers agree across backends") {
    const std::size_t n = 50000;
    std::vector<cplx> a(n), b(n);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> w = random_vec(n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = cplx(u(rng), u(rng));
        b[i] = cplx(u(rng), u(rng));
        w[i] = std::abs(w[i]) + 0.1;
    }
    k::set_backend(k::Backend::serial);
    const cplx c1 = k::cdot(a, b);
    double p2a, p4a, p6a;
    k::weighted_powers(w, a, p2a, p4a, p6a);
    k::set_backend(k::Backend::openmp);
    const cplx c2 = k::cdot(a, b);
    double p2b, p4b, p6b;
    k::weighted_powers(w, a, p2b, p4b, p6b);
    CHECK(c1 == c2);
    CHECK(p2a == p2b);
    CHECK(p4a == p4b);
    CHECK(p6a == p6b);
    // sanity against a naive sum
    double ref = 0;
    for (std::size_t i = 0; i < n; ++i) ref += w[i] * std::norm(a[i]);
    CHECK(p2a == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("tridiagonal solver handles pivoting") {
    const std::size_t n = 200;
    std::vector<double> dl(n - 1), du(n - 1), d(n), x(n);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = 0.1 * u(rng); // weak diagonal forces pivoting
        x[i] = u(rng);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        dl[i] = 1.0 + 0.3 * u(rng);
        du[i] = 1.0 + 0.3 * u(rng);
    }
    // b = A x
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
        b[i] = d[i] * x[i];
        if (i > 0) b[i] += dl[i - 1] * x[i - 1];
        if (i + 1 < n) b[i] += du[i] * x[i + 1];
    }
    k::solve_tridiag(dl, d, du, b);
    double err = 0;
    for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(b[i] - x[i]));
    CHECK(err < 1e-10);
}

TEST_CASE("banded LU solves pentadiagonal systems, with and without pivoting") {
    // diag_scale 3.0 keeps the matrix near-dominant; 0.05 forces heavy row
    // pivoting and fill-in
    for (double diag_scale : {3.0, 0.05}) {
        const std::size_t n = 300;
        k::BandedLU lu(n, 2, 2);
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = (i >= 2 ? i - 2 : 0); j <= std::min(n - 1, i + 2); ++j) {
                const double v = (i == j ? diag_scale : 0.0) + u(rng);
                lu.at(i, j) = v;
                A[i][j] = v;
            }
        std::vector<double> x(n), b(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) x[i] = u(rng);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) b[i] += A[i][j] * x[j];
        lu.factor();
        REQUIRE(!lu.singular());
        lu.solve(b);
        double err = 0;
        for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(b[i] - x[i]));
        CHECK(err < 1e-8);
    }
}

TEST_CASE("pointwise kernels match a direct loop") {
    const std::size_t n = 10000;
    std::vector<cplx> a(n);
    for (std::size_t i = 0; i < n; ++i)
        a[i] = cplx(std::sin(0.01 * (double)i), std::cos(0.02 * (double)i));
    std::vector<double> w1(n), w2(n);
    k::set_backend(k::Backend::serial);
    k::cubic_quintic_weight(a, w1);
    k::set_backend(k::Backend::openmp);
    k::cubic_quintic_weight(a, w2);
    for (std::size_t i = 0; i < n; i += 997) {
        const double m2 = std::norm(a[i]);
        CHECK(w1[i] == m2 + m2 * m2);
        CHECK(w1[i] == w2[i]);
    }
}
