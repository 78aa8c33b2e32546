#include "cqnls/linearized.hpp"

#include <cmath>
#include <numbers>

namespace cqnls {

LinearizedOperators::LinearizedOperators(const GroundState& gs)
    : omega_(gs.omega), grid_(gs.Q.grid()), Q_(gs.Q) {
    const std::size_t n = grid_->n();
    pot_plus_.resize(n);
    pot_minus_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double q2 = std::norm(Q_[i]);
        pot_plus_[i] = 3.0 * q2 + 5.0 * q2 * q2;
        pot_minus_[i] = q2 + q2 * q2;
    }
}

RadialField LinearizedOperators::apply(LSign s, const RadialField& v) const {
    require_same_grid(Q_, v);
    RadialField lap = apply_radial_laplacian(v);
    const auto& pot = s == LSign::plus ? pot_plus_ : pot_minus_;
    RadialField out(grid_);
    for (std::size_t i = 0; i < grid_->n(); ++i)
        out[i] = -lap[i] + (omega_ - pot[i]) * v[i];
    return out;
}

void LinearizedOperators::apply_v(LSign s, std::span<const double> v,
                                  std::span<double> out) const {
    const std::size_t n = grid_->n();
    const double h2 = grid_->spacing() * grid_->spacing();
    const auto& pot = s == LSign::plus ? pot_plus_ : pot_minus_;
    for (std::size_t i = 0; i < n; ++i) {
        const double vm = i == 0 ? 0.0 : v[i - 1];
        const double vp = i + 1 == n ? 0.0 : v[i + 1];
        out[i] = -(vm - 2.0 * v[i] + vp) / h2 + (omega_ - pot[i]) * v[i];
    }
}

void LinearizedOperators::matrix(LSign s, std::vector<double>& diag, double& off) const {
    const std::size_t n = grid_->n();
    const double h2 = grid_->spacing() * grid_->spacing();
    const auto& pot = s == LSign::plus ? pot_plus_ : pot_minus_;
    diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = 2.0 / h2 + omega_ - pot[i];
    off = -1.0 / h2;
}

std::vector<double> LinearizedOperators::solve_v(LSign s, std::vector<double> b) const {
    std::vector<double> diag;
    double off;
    matrix(s, diag, off);
    const std::size_t n = diag.size();
    std::vector<double> dl(n - 1, off), du(n - 1, off);
    kernels::solve_tridiag(std::move(dl), std::move(diag), std::move(du), b);
    return b;
}

double LinearizedOperators::quadratic_form(const RadialField& f) const {
    RadialField re(grid_), im(grid_);
    for (std::size_t i = 0; i < grid_->n(); ++i) {
        re[i] = f[i].real();
        im[i] = f[i].imag();
    }
    const RadialField Lre = apply(LSign::plus, re);
    const RadialField Lim = apply(LSign::minus, im);
    return l2_pairing(Lre, re).real() + l2_pairing(Lim, im).real();
}

RadialField InternalMode::Yplus() const {
    RadialField out = Y1;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = Y1[i] + cplx(0, 1) * Y2[i];
    return out;
}

RadialField InternalMode::Yminus() const {
    RadialField out = Y1;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = Y1[i] - cplx(0, 1) * Y2[i];
    return out;
}

kernels::BandedLU composed_operator_banded(const LinearizedOperators& ops, double shift) {
    const std::size_t n = ops.grid()->n();
    std::vector<double> dp, dm;
    double off;
    ops.matrix(LSign::plus, dp, off);
    ops.matrix(LSign::minus, dm, off);
    kernels::BandedLU lu(n, 2, 2);
    // P = A_minus A_plus with A_* = tridiag(off, d_*, off)
    for (std::size_t i = 0; i < n; ++i) {
        auto dplus = [&](std::size_t j) { return dp[j]; };
        if (i >= 2) lu.at(i, i - 2) = off * off;
        if (i >= 1) lu.at(i, i - 1) = off * dplus(i - 1) + dm[i] * off;
        double diag = dm[i] * dplus(i) + shift;
        if (i >= 1) diag += off * off;
        if (i + 1 < n) diag += off * off;
        lu.at(i, i) = diag;
        if (i + 1 < n) lu.at(i, i + 1) = dm[i] * off + off * dplus(i + 1);
        if (i + 2 < n) lu.at(i, i + 2) = off * off;
    }
    return lu;
}

namespace {

void apply_composed(const LinearizedOperators& ops, std::span<const double> x,
                    std::vector<double>& tmp, std::span<double> out) {
    tmp.resize(x.size());
    ops.apply_v(LSign::plus, x, tmp);
    ops.apply_v(LSign::minus, tmp, out);
}

double vdot(std::span<const double> a, std::span<const double> b) {
    return kernels::dot(a, b);
}

void normalize(std::vector<double>& x) {
    const double nn = std::sqrt(vdot(x, x));
    for (double& v : x) v /= nn;
}

} // namespace

InternalMode solve_internal_mode(const LinearizedOperators& ops,
                                 const InternalModeConfig& cfg) {
    const auto& grid = *ops.grid();
    const std::size_t n = grid.n();
    const double omega = ops.omega();

    // v-representation of Q and of the deflation direction L_plus^{-1} Q
    std::vector<double> qv(n);
    for (std::size_t i = 0; i < n; ++i) qv[i] = grid.node(i) * ops.Q()[i].real();
    std::vector<double> negq = qv;
    for (double& v : negq) v = -v;
    std::vector<double> defl = ops.solve_v(LSign::plus, negq); // ~ d/domega Q direction
    const double qw = vdot(qv, defl);
    auto deflate = [&](std::vector<double>& x) {
        if (std::abs(qw) < 1e-300) return;
        const double c = vdot(qv, x) / qw;
        for (std::size_t i = 0; i < n; ++i) x[i] -= c * defl[i];
    };

    std::vector<double> tmp, Px(n);
    auto rq_and_residual = [&](const std::vector<double>& x, double& rho, double& res) {
        apply_composed(ops, x, tmp, Px);
        const double xx = vdot(x, x);
        rho = vdot(x, Px) / xx;
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = Px[i] - rho * x[i];
            s += r * r;
        }
        res = std::sqrt(s / xx);
    };

    // initial vector: a radial bump shaped like Q^2 works well; deflated
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = qv[i] * ops.Q()[i].real();
    deflate(x);
    normalize(x);

    // scan a few negative shifts, keep the candidate with the lowest
    // Rayleigh quotient; the eigenvalue -e^2 lies in (-omega^2, 0)
    double best_rho = 0.0;
    std::vector<double> best_x;
    for (double frac : {0.9, 0.6, 0.35, 0.18, 0.08, 0.03}) {
        const double mu = -(frac * omega) * (frac * omega);
        kernels::BandedLU lu = composed_operator_banded(ops, -mu);
        lu.factor();
        if (lu.singular()) continue;
        std::vector<double> y = x;
        for (int it = 0; it < 4; ++it) {
            lu.solve(y);
            deflate(y);
            normalize(y);
        }
        double rho, res;
        rq_and_residual(y, rho, res);
        if (rho < best_rho) {
            best_rho = rho;
            best_x = y;
        }
    }
    if (best_x.empty() || best_rho >= 0.0)
        throw SpectralFailureError(
            "no negative eigenvalue of the composed operator found (omega = " +
            std::to_string(omega) + ")");

    // Rayleigh-quotient iteration with deflation
    x = best_x;
    double rho = best_rho, res = 1.0;
    const double scale = omega * omega;
    for (int it = 0; it < cfg.max_iter; ++it) {
        rq_and_residual(x, rho, res);
        if (res <= cfg.rq_tol * scale) break;
        kernels::BandedLU lu = composed_operator_banded(ops, -rho);
        lu.factor();
        if (lu.singular()) {
            kernels::BandedLU lu2 = composed_operator_banded(ops, -rho * (1.0 + 1e-10) - 1e-14);
            lu2.factor();
            if (lu2.singular()) break;
            lu2.solve(x);
        } else {
            lu.solve(x);
        }
        deflate(x);
        normalize(x);
    }
    rq_and_residual(x, rho, res);
    if (res > 100.0 * cfg.rq_tol * scale)
        throw NumericError("internal mode iteration stagnated, residual " +
                           std::to_string(res / scale));
    if (rho >= 0.0)
        throw SpectralFailureError("composed-operator eigenvalue not negative");
    const double e = std::sqrt(-rho);
    if (e >= omega)
        throw SpectralFailureError("discrete eigenvalue inside the essential range");

    // assemble the mode pair: Y2 = -(1/e) L_plus Y1 (v representation)
    std::vector<double> y2v(n);
    ops.apply_v(LSign::plus, x, y2v);
    for (double& v : y2v) v /= -e;

    // pairing and normalization 2 (Y1,Y2) = 1
    const double wq = 4.0 * std::numbers::pi * grid.spacing();
    double pairing = wq * vdot(x, y2v);
    if (pairing <= 0)
        throw SpectralFailureError("internal mode pairing not positive");
    double c = 1.0 / std::sqrt(2.0 * pairing);
    double sQ2 = wq * vdot(qv, y2v) * c;
    if (sQ2 > 0) c = -c;

    InternalMode m;
    m.e_omega = e;
    std::vector<double> y1u(n), y2u(n);
    for (std::size_t i = 0; i < n; ++i) {
        y1u[i] = c * x[i] / grid.node(i);
        y2u[i] = c * y2v[i] / grid.node(i);
    }
    m.Y1 = RadialField(ops.grid(), y1u);
    m.Y2 = RadialField(ops.grid(), y2u);
    m.pairing = l2_pairing(m.Y1, m.Y2).real();
    m.signQ2 = l2_pairing(ops.Q(), m.Y2).real();

    const RadialField r1 = ops.apply(LSign::plus, m.Y1);
    const RadialField r2 = ops.apply(LSign::minus, m.Y2);
    double n1 = 0, n2 = 0, d1 = 0, d2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = grid.weights()[i];
        n1 += w * std::norm(r1[i] + e * m.Y2[i]);
        n2 += w * std::norm(r2[i] - e * m.Y1[i]);
        d1 += w * std::norm(r1[i]);
        d2 += w * std::norm(r2[i]);
    }
    m.residual_plus = std::sqrt(n1 / std::max(d1, 1e-300));
    m.residual_minus = std::sqrt(n2 / std::max(d2, 1e-300));
    return m;
}

RadialField nonlinear_remainder(const LinearizedOperators& ops, const RadialField& eta) {
    require_same_grid(ops.Q(), eta);
    RadialField out(ops.grid());
    const cplx I(0, 1);
    for (std::size_t i = 0; i < eta.size(); ++i) {
        const double Q = ops.Q()[i].real();
        const cplx e = eta[i];
        const cplx w = Q + e;
        const double a2 = std::norm(w);
        const cplx cubic = a2 * w - Q * Q * Q - 2.0 * Q * Q * e - Q * Q * std::conj(e);
        const cplx quintic = a2 * a2 * w - Q * Q * Q * Q * Q -
                             3.0 * Q * Q * Q * Q * e -
                             2.0 * Q * Q * Q * Q * std::conj(e);
        out[i] = I * (cubic + quintic);
    }
    return out;
}

SpectralReport check_spectral_inequalities(const InternalMode& mode,
                                           const GroundState& gs,
                                           const RadialField* dQ) {
    SpectralReport rep;
    const RadialField& Q = gs.Q;
    const double nQ = std::sqrt(l2_norm_sq(Q));
    const double nY1 = std::sqrt(l2_norm_sq(mode.Y1));
    rep.orth_Q_Y1 = std::abs(l2_pairing(Q, mode.Y1).real()) / (nQ * nY1);
    rep.orth_Q_Y1_ok = rep.orth_Q_Y1 <= 1e-8;
    if (dQ) {
        const double ndQ = std::sqrt(l2_norm_sq(*dQ));
        const double nY2 = std::sqrt(l2_norm_sq(mode.Y2));
        rep.orth_dQ_Y2 = std::abs(l2_pairing(*dQ, mode.Y2).real()) / (ndQ * nY2);
        rep.orth_dQ_Y2_ok = rep.orth_dQ_Y2 <= 1e-3;
    } else {
        rep.orth_dQ_Y2 = std::nan("");
    }
    rep.pairing = mode.pairing;
    rep.pairing_positive = rep.pairing > 0;
    rep.signQ2 = mode.signQ2;
    rep.signQ2_negative = rep.signQ2 < 0;
    RadialField Q5(Q.grid());
    for (std::size_t i = 0; i < Q.size(); ++i) {
        const double q = Q[i].real();
        Q5[i] = q * q * q * q * q;
    }
    rep.gap_lhs = 0.5 * mode.e_omega * std::abs(rep.signQ2);
    rep.gap_rhs = 4.0 * std::abs(l2_pairing(Q5, mode.Y1).real());
    rep.gap_ok = rep.gap_lhs >= rep.gap_rhs;
    return rep;
}

} // namespace cqnls
