#include "cqnls/grid.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

#include "cqnls/kernels.hpp"

namespace cqnls {

namespace {
bool g_warn_enabled = true;
}

void log_warn(const std::string& msg) {
    if (g_warn_enabled) std::fprintf(stderr, "[cqnls] warning: %s\n", msg.c_str());
}

void set_warn_enabled(bool on) { g_warn_enabled = on; }

RadialGrid::RadialGrid(double r_max, std::size_t n) : r_max_(r_max), n_(n) {
    if (!(r_max > 0.0)) throw ConfigError("grid: r_max must be positive");
    if (n < 16) throw ConfigError("grid: need at least 16 interior nodes");
    h_ = r_max / (double)(n + 1);
    r_.resize(n);
    w_.resize(n);
    const double c = 4.0 * std::numbers::pi * h_;
    for (std::size_t i = 0; i < n; ++i) {
        r_[i] = (double)(i + 1) * h_;
        w_[i] = c * r_[i] * r_[i];
    }
}

GridPtr build_grid(double r_max, std::size_t n) {
    return std::make_shared<const RadialGrid>(r_max, n);
}

GridSuggestion suggest_grid(double omega) {
    GridSuggestion s;
    const double h_core =
        omega > 0.1 ? 0.040 * std::pow(0.1 / omega, 2.26) : 0.045;
    const double h = std::clamp(h_core, 0.0075, 0.045);
    const double r_need = std::clamp(28.0 / std::sqrt(omega), 40.0, 260.0);
    s.r_max = std::min(r_need, h * 4999.0);
    s.n = (std::size_t)std::clamp(s.r_max / h, 1024.0, 4999.0);
    return s;
}

RadialField::RadialField(GridPtr grid, cplx fill)
    : grid_(std::move(grid)), s_(grid_->n(), fill) {}

RadialField::RadialField(GridPtr grid, std::vector<cplx> samples)
    : grid_(std::move(grid)), s_(std::move(samples)) {
    if (s_.size() != grid_->n()) throw UsageError("field: sample count != grid size");
}

RadialField::RadialField(GridPtr grid, const std::vector<double>& real_samples)
    : grid_(std::move(grid)), s_(real_samples.begin(), real_samples.end()) {
    if (s_.size() != grid_->n()) throw UsageError("field: sample count != grid size");
}

bool RadialField::finite() const {
    for (const cplx& z : s_)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

std::vector<double> RadialField::real_part() const {
    std::vector<double> out(s_.size());
    for (std::size_t i = 0; i < s_.size(); ++i) out[i] = s_[i].real();
    return out;
}

std::vector<double> RadialField::imag_part() const {
    std::vector<double> out(s_.size());
    for (std::size_t i = 0; i < s_.size(); ++i) out[i] = s_[i].imag();
    return out;
}

RadialField RadialField::conjugated() const {
    RadialField out = *this;
    for (cplx& z : out.s_) z = std::conj(z);
    return out;
}

RadialField& RadialField::operator+=(const RadialField& o) {
    require_same_grid(*this, o);
    for (std::size_t i = 0; i < s_.size(); ++i) s_[i] += o.s_[i];
    return *this;
}

RadialField& RadialField::operator-=(const RadialField& o) {
    require_same_grid(*this, o);
    for (std::size_t i = 0; i < s_.size(); ++i) s_[i] -= o.s_[i];
    return *this;
}

RadialField& RadialField::operator*=(cplx s) {
    for (cplx& z : s_) z *= s;
    return *this;
}

void require_same_grid(const RadialField& a, const RadialField& b) {
    if (!a.grid() || !b.grid() || !a.grid()->same_as(*b.grid()))
        throw UsageError("fields live on different grids");
}

double integrate(const RadialGrid& g, std::span<const double> f) {
    if (f.size() != g.n()) throw UsageError("integrate: sample count != grid size");
    const std::size_t n = g.n();
    const double bulk = kernels::weighted_sum(g.weights(), f);
    // closed-interval trapezoid: the r=0 end contributes nothing (r^2 f -> 0);
    // the r_max end uses the linear extrapolation of the r^2-weighted density,
    // which vanishes for decayed fields
    const double gn = g.weights()[n - 1] * f[n - 1];
    const double gn1 = g.weights()[n - 2] * f[n - 2];
    const double closure = 0.5 * (2.0 * gn - gn1);
    if (std::abs(gn) > 1e-12 * (std::abs(bulk) + 1.0))
        log_warn("integrate: integrand not decayed at r_max, truncation error likely");
    return bulk + closure;
}

double integrate(const RadialField& f) {
    std::vector<double> re = f.real_part();
    return integrate(*f.grid(), re);
}

cplx integrate_complex(const RadialField& f) {
    const auto& w = f.grid()->weights();
    RadialField ones(f.grid(), cplx(1.0));
    // sum w_i f_i = <f, 1>_w
    cplx s = 0.0;
    const auto ss = f.samples();
    for (std::size_t i = 0; i < ss.size(); ++i) s += w[i] * ss[i];
    return s;
}

cplx l2_pairing(const RadialField& u, const RadialField& v) {
    require_same_grid(u, v);
    const auto& w = u.grid()->weights();
    const auto a = u.samples();
    const auto b = v.samples();
    // deterministic blocked reduction over w_i a_i conj(b_i)
    std::vector<cplx> tmp(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) tmp[i] = w[i] * a[i];
    return kernels::cdot(tmp, b);
}

double l2_pairing_real(const RadialField& u, const RadialField& v) {
    return l2_pairing(u, v).real();
}

double l2_norm_sq(const RadialField& u) {
    double p2, p4, p6;
    kernels::weighted_powers(u.grid()->weights(), u.samples(), p2, p4, p6);
    return p2;
}

NormReport norms(const RadialField& u) {
    if (!u.finite()) throw InputError("norms: field contains NaN/Inf");
    NormReport r;
    kernels::weighted_powers(u.grid()->weights(), u.samples(), r.l2_sq, r.l4_4, r.l6_6);

    // summation-by-parts gradient: 4 pi / h * sum_{i=0..n} |v_{i+1} - v_i|^2
    // with v = r*u and v_0 = v_{n+1} = 0
    const auto& g = *u.grid();
    const double h = g.spacing();
    const auto s = u.samples();
    const std::size_t n = g.n();
    std::vector<double> dsq(n + 1);
    cplx vprev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const cplx v = g.node(i) * s[i];
        dsq[i] = std::norm(v - vprev);
        vprev = v;
    }
    dsq[n] = std::norm(vprev); // step to v_{n+1} = 0
    r.grad_sq = 4.0 * std::numbers::pi / h * kernels::sum(dsq);
    r.h1_sq = r.l2_sq + r.grad_sq;
    return r;
}

double h1_norm(const RadialField& u) { return std::sqrt(norms(u).h1_sq); }

double h1_distance(const RadialField& u, const RadialField& v) {
    require_same_grid(u, v);
    RadialField d = u;
    d -= v;
    return h1_norm(d);
}

RadialField apply_radial_laplacian(const RadialField& u) {
    const auto& g = *u.grid();
    const std::size_t n = g.n();
    const double h2 = g.spacing() * g.spacing();
    const auto s = u.samples();
    RadialField out(u.grid());
    auto v = [&](std::size_t i) -> cplx {
        return g.node(i) * s[i];
    };
    for (std::size_t i = 0; i < n; ++i) {
        const cplx vm = i == 0 ? cplx(0.0) : v(i - 1);
        const cplx vp = i + 1 == n ? cplx(0.0) : v(i + 1);
        out[i] = (vm - 2.0 * v(i) + vp) / (h2 * g.node(i));
    }
    return out;
}

cplx interpolate(const RadialField& u, double r) {
    const auto& g = *u.grid();
    const double h = g.spacing();
    if (r >= g.r_max()) return 0.0;
    // v = r*u is sampled at v_0 = 0, v_i = r_i u_i; interpolate v cubically
    // and divide by r (v is odd-extended through the origin).
    std::function<cplx(long)> v_at = [&](long i) -> cplx {
        if (i == 0) return 0.0;
        if (i < 0) return -v_at(-i); // odd extension
        if (i > (long)g.n()) {
            // beyond Dirichlet node: zero extension
            return 0.0;
        }
        return g.node((std::size_t)i - 1) * u[(std::size_t)i - 1];
    };
    const double x = r / h; // node index coordinate, node i at x = i
    long i1 = (long)std::floor(x);
    const double t = x - (double)i1;
    // Catmull-Rom through v_{i1-1..i1+2}
    const cplx p0 = v_at(i1 - 1), p1 = v_at(i1), p2 = v_at(i1 + 1), p3 = v_at(i1 + 2);
    const cplx a = 2.0 * p1;
    const cplx b = p2 - p0;
    const cplx c = 2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3;
    const cplx d = -p0 + 3.0 * p1 - 3.0 * p2 + p3;
    const cplx v = 0.5 * (a + b * t + c * t * t + d * t * t * t);
    if (r < 1e-300) {
        // limit v/r at the origin: v'(0) via the same cubic
        const cplx vp = 0.5 * b / h;
        return vp;
    }
    return v / r;
}

} // namespace cqnls
