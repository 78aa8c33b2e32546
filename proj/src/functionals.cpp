#include "cqnls/functionals.hpp"

#include <cmath>
#include <numbers>

#include "cqnls/kernels.hpp"

namespace cqnls {

FunctionalValues functional_values_from_norms(const NormReport& n, double omega) {
    FunctionalValues f;
    f.norms = n;
    f.omega = omega;
    f.mass = 0.5 * n.l2_sq;
    f.energy = 0.5 * n.grad_sq - 0.25 * n.l4_4 - n.l6_6 / 6.0;
    f.K = n.grad_sq - 0.75 * n.l4_4 - n.l6_6;
    f.action = f.energy + omega * f.mass;
    f.J = f.action - 0.5 * f.K;
    return f;
}

FunctionalValues evaluate(const RadialField& u, double omega) {
    if (!u.finite()) throw InputError("evaluate: field contains NaN/Inf");
    return functional_values_from_norms(norms(u), omega);
}

RadialField scale(const RadialField& u, double lambda) {
    if (!(lambda > 0.0)) throw InputError("scale: lambda must be positive");
    if (lambda == 1.0) return u;
    const double amp = lambda * std::sqrt(lambda);
    RadialField out(u.grid());
    const auto& g = *u.grid();
    for (std::size_t i = 0; i < g.n(); ++i)
        out[i] = amp * interpolate(u, lambda * g.node(i));
    return out;
}

double K_of_scaling(const NormReport& base, double lambda) {
    const double l2 = lambda * lambda;
    return l2 * base.grad_sq - 0.75 * l2 * lambda * base.l4_4 -
           l2 * l2 * l2 * base.l6_6;
}

double lambda_star(const RadialField& u) {
    const NormReport base = norms(u);
    if (base.l2_sq == 0.0) throw InputError("lambda_star: zero field");
    // K(T_lam u) = lam^2 [ g - (3/4) lam a - lam^4 b ]: positive for small
    // lam, single sign change.  Bracket on a geometric ladder, then bisect.
    double lo = 1e-3, hi = 1e-3;
    const double lam_max = 1e3;
    if (K_of_scaling(base, lo) <= 0.0)
        throw NumericError("lambda_star: K not positive at bracket start");
    while (hi < lam_max && K_of_scaling(base, hi) > 0.0) hi *= 2.0;
    if (K_of_scaling(base, hi) > 0.0)
        throw NumericError("lambda_star: no sign change below lambda_max");
    lo = hi / 2.0;
    while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        (K_of_scaling(base, mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

RadialField action_gradient(const RadialField& u, double omega) {
    RadialField lap = apply_radial_laplacian(u);
    RadialField out(u.grid());
    const auto s = u.samples();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double m2 = std::norm(s[i]);
        out[i] = -lap[i] + omega * s[i] - (m2 + m2 * m2) * s[i];
    }
    return out;
}

double h_minus1_norm(const RadialField& r) {
    // solve (-Lap + 1) s = r in the v representation and return sqrt(<r,s>)
    const auto& g = *r.grid();
    const std::size_t n = g.n();
    const double h2 = g.spacing() * g.spacing();
    std::vector<cplx> dl(n - 1, cplx(-1.0 / h2)), du(n - 1, cplx(-1.0 / h2));
    std::vector<cplx> d(n, cplx(2.0 / h2 + 1.0));
    std::vector<cplx> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = g.node(i) * r[i];
    kernels::solve_tridiag(std::move(dl), std::move(d), std::move(du), b);
    RadialField s(r.grid());
    for (std::size_t i = 0; i < n; ++i) s[i] = b[i] / g.node(i);
    const double val = l2_pairing(r, s).real();
    return std::sqrt(std::max(0.0, val));
}

double dist_to_orbit(const RadialField& u, const RadialField& Q) {
    require_same_grid(u, Q);
    // ||u - e^{it} Q||_{H1}^2 = ||u||^2 + ||Q||^2 - 2 Re e^{-it} <u,Q>_{H1};
    // the minimizer over the phase replaces the pairing by its modulus.
    const NormReport nu = norms(u);
    const NormReport nq = norms(Q);
    // complex H1 pairing: <u,Q>_{L2} + <grad u, grad Q>; the gradient part in
    // the v representation is sum (dv_u)(conj dv_Q) * 4pi/h
    cplx pair = l2_pairing(u, Q);
    const auto& g = *u.grid();
    const double h = g.spacing();
    const std::size_t n = g.n();
    cplx gpair = 0.0;
    cplx vu_prev = 0.0, vq_prev = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const cplx vu = i < n ? g.node(i) * u[i] : cplx(0.0);
        const cplx vq = i < n ? g.node(i) * Q[i] : cplx(0.0);
        gpair += (vu - vu_prev) * std::conj(vq - vq_prev);
        vu_prev = vu;
        vq_prev = vq;
    }
    pair += 4.0 * std::numbers::pi / h * gpair;
    const double d2 = nu.h1_sq + nq.h1_sq - 2.0 * std::abs(pair);
    return std::sqrt(std::max(0.0, d2));
}

} // namespace cqnls
