// Timing comparison of the serial reference kernels against the OpenMP
// variants, plus one full implicit-midpoint step at production sizes.
// Reductions are blocked identically in both backends, so the outputs must
// agree bitwise; the benchmark asserts that while it times them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "cqnls/evolution.hpp"
#include "cqnls/kernels.hpp"

using namespace cqnls;
using clock_t_ = std::chrono::steady_clock;

template <typename F>
static double time_ms(F&& f, int reps) {
    f(); // warm up
    const auto t0 = clock_t_::now();
    for (int i = 0; i < reps; ++i) f();
    const auto t1 = clock_t_::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

int main() {
    std::printf("openmp compiled: %s, max threads: %d\n",
                kernels::openmp_compiled() ? "yes" : "no", kernels::max_threads());
    std::printf("%-28s %12s %12s %8s\n", "kernel", "serial [ms]", "openmp [ms]", "speedup");

    for (std::size_t n : {100000ul, 1000000ul, 4000000ul}) {
        std::vector<double> w(n), f(n);
        std::vector<cplx> a(n), out(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = (double)i / (double)n;
            w[i] = 1.0 + x;
            f[i] = std::sin(12.0 * x);
            a[i] = cplx(std::cos(7.0 * x), std::sin(5.0 * x)) * std::exp(-3.0 * x);
        }
        double s_serial = 0, s_omp = 0;

        kernels::set_backend(kernels::Backend::serial);
        const double t_ws_s = time_ms([&] { s_serial = kernels::weighted_sum(w, f); }, 20);
        kernels::set_backend(kernels::Backend::openmp);
        const double t_ws_o = time_ms([&] { s_omp = kernels::weighted_sum(w, f); }, 20);
        if (s_serial != s_omp) {
            std::printf("FATAL: weighted_sum backends disagree\n");
            return 1;
        }
        std::printf("weighted_sum  n=%-12zu %12.4f %12.4f %7.2fx\n", n, t_ws_s, t_ws_o,
                    t_ws_s / t_ws_o);

        double p2s, p4s, p6s, p2o, p4o, p6o;
        kernels::set_backend(kernels::Backend::serial);
        const double t_p_s =
            time_ms([&] { kernels::weighted_powers(w, a, p2s, p4s, p6s); }, 20);
        kernels::set_backend(kernels::Backend::openmp);
        const double t_p_o =
            time_ms([&] { kernels::weighted_powers(w, a, p2o, p4o, p6o); }, 20);
        if (p2s != p2o || p4s != p4o || p6s != p6o) {
            std::printf("FATAL: weighted_powers backends disagree\n");
            return 1;
        }
        std::printf("weighted_powers n=%-10zu %12.4f %12.4f %7.2fx\n", n, t_p_s, t_p_o,
                    t_p_s / t_p_o);

        std::vector<double> wts(n);
        kernels::set_backend(kernels::Backend::serial);
        const double t_cq_s = time_ms([&] { kernels::cubic_quintic_weight(a, wts); }, 20);
        kernels::set_backend(kernels::Backend::openmp);
        const double t_cq_o = time_ms([&] { kernels::cubic_quintic_weight(a, wts); }, 20);
        std::printf("cubic_quintic_weight n=%-5zu %12.4f %12.4f %7.2fx\n", n, t_cq_s,
                    t_cq_o, t_cq_s / t_cq_o);
    }

    // one full implicit midpoint step at a production-like size
    {
        GridPtr g = build_grid(120.0, 4000);
        RadialField psi = sample_field(g, [](double r) { return 0.4 * std::exp(-0.1 * r * r); });
        kernels::set_backend(kernels::Backend::serial);
        const double t_s = time_ms([&] { (void)step(psi, 1e-3); }, 10);
        kernels::set_backend(kernels::Backend::openmp);
        const double t_o = time_ms([&] { (void)step(psi, 1e-3); }, 10);
        std::printf("%-28s %12.4f %12.4f %7.2fx\n", "implicit_midpoint n=4000", t_s, t_o,
                    t_s / t_o);
    }
    kernels::set_backend(kernels::Backend::openmp);
    return 0;
}
