#include "cqnls/special.hpp"

#include <algorithm>
#include <cmath>

#include "cqnls/kernels.hpp"

namespace cqnls {

namespace {

using FieldPoly = std::vector<std::vector<cplx>>; // [degree][node], degree 0..k

FieldPoly poly_zero(int k, std::size_t n) {
    return FieldPoly((std::size_t)k + 1, std::vector<cplx>(n, cplx(0.0)));
}

// c = a * b truncated at degree k
FieldPoly poly_mul(const FieldPoly& a, const FieldPoly& b, int k, std::size_t n) {
    FieldPoly c = poly_zero(k, n);
    for (std::size_t p = 0; p < a.size(); ++p)
        for (std::size_t q = 0; q < b.size(); ++q) {
            if (p + q > (std::size_t)k) continue;
            auto& dst = c[p + q];
            const auto& ap = a[p];
            const auto& bq = b[q];
            for (std::size_t i = 0; i < n; ++i) dst[i] += ap[i] * bq[i];
        }
    return c;
}

FieldPoly poly_conj(const FieldPoly& a) {
    FieldPoly c = a;
    for (auto& lvl : c)
        for (auto& z : lvl) z = std::conj(z);
    return c;
}

void poly_add_scaled(FieldPoly& acc, const FieldPoly& a, cplx s,
                     const std::vector<double>& qpow) {
    for (std::size_t d = 0; d < acc.size() && d < a.size(); ++d)
        for (std::size_t i = 0; i < acc[d].size(); ++i)
            acc[d][i] += s * qpow[i] * a[d][i];
}

} // namespace

RadialField SeriesProfile::at_time(double t) const {
    RadialField out(Z.front().grid());
    const double X = std::exp(-e_omega * t);
    double Xj = 1.0;
    for (int j = 1; j <= k; ++j) {
        Xj *= X;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += Xj * Z[(std::size_t)j - 1][i];
    }
    return out;
}

SeriesProfile build_profile_series(double A, int k, const InternalMode& mode,
                                   const LinearizedOperators& ops) {
    if (k < 1) throw ConfigError("series: order must be >= 1");
    if (k > 6) throw ConfigError("series: order capped at 6");
    const GridPtr grid = ops.grid();
    const std::size_t n = grid->n();
    const double e = mode.e_omega;

    SeriesProfile sp;
    sp.A = A;
    sp.k = k;
    sp.e_omega = e;
    sp.Z.reserve((std::size_t)k);

    RadialField Z1 = mode.Yminus();
    Z1 *= cplx(A);
    sp.Z.push_back(Z1);
    if (A == 0.0) {
        for (int j = 2; j <= k; ++j) sp.Z.push_back(RadialField(grid));
        sp.residual_exponent = 0.0;
        return sp;
    }

    std::vector<double> q(n), q2(n), q3(n);
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = ops.Q()[i].real();
        q2[i] = q[i] * q[i];
        q3[i] = q2[i] * q[i];
    }
    std::vector<double> ones(n, 1.0);

    for (int j = 2; j <= k; ++j) {
        // V = sum_{m<j} X^m Z_m as a polynomial with zero constant term
        FieldPoly V = poly_zero(j, n);
        for (int m = 1; m < j; ++m)
            for (std::size_t i = 0; i < n; ++i) V[(std::size_t)m][i] = sp.Z[(std::size_t)m - 1][i];
        const FieldPoly Vb = poly_conj(V);
        const FieldPoly A2 = poly_mul(V, V, j, n);
        const FieldPoly AB = poly_mul(V, Vb, j, n);
        const FieldPoly B2 = poly_mul(Vb, Vb, j, n);
        const FieldPoly A3 = poly_mul(A2, V, j, n);
        const FieldPoly A2B = poly_mul(A2, Vb, j, n);
        const FieldPoly AB2 = poly_mul(AB, Vb, j, n);
        const FieldPoly A3B = poly_mul(A3, Vb, j, n);
        const FieldPoly A2B2 = poly_mul(A2B, Vb, j, n);
        const FieldPoly A3B2 = poly_mul(A3B, Vb, j, n);

        // N1 = i (2 Q V conj(V) + Q V^2 + V^2 conj(V))
        // N2 = i (3 Q^3 V^2 + 6 Q^3 V conj(V) + Q^3 conj(V)^2 + Q^2 V^3
        //        + 6 Q^2 V^2 conj(V) + 3 Q^2 V conj(V)^2 + 2 Q V^3 conj(V)
        //        + 3 Q V^2 conj(V)^2 + V^3 conj(V)^2)
        FieldPoly N = poly_zero(j, n);
        const cplx I(0, 1);
        poly_add_scaled(N, AB, 2.0 * I, q);
        poly_add_scaled(N, A2, I, q);
        poly_add_scaled(N, poly_mul(AB, V, j, n), I, ones);
        poly_add_scaled(N, A2, 3.0 * I, q3);
        poly_add_scaled(N, AB, 6.0 * I, q3);
        poly_add_scaled(N, B2, I, q3);
        poly_add_scaled(N, A3, I, q2);
        poly_add_scaled(N, A2B, 6.0 * I, q2);
        poly_add_scaled(N, AB2, 3.0 * I, q2);
        poly_add_scaled(N, A3B, 2.0 * I, q);
        poly_add_scaled(N, A2B2, 3.0 * I, q);
        poly_add_scaled(N, A3B2, I, ones);

        // solve (i L - j e) Z_j = F_j via the composed system
        //   (L_minus L_plus + (je)^2) z1 = L_minus f2 - je f1
        //   z2 = (L_plus z1 - f2) / (je)
        const double je = (double)j * e;
        std::vector<double> f1(n), f2(n); // v-representation
        for (std::size_t i = 0; i < n; ++i) {
            f1[i] = grid->node(i) * N[(std::size_t)j][i].real();
            f2[i] = grid->node(i) * N[(std::size_t)j][i].imag();
        }
        std::vector<double> rhs(n), tmp(n);
        ops.apply_v(LSign::minus, f2, rhs);
        for (std::size_t i = 0; i < n; ++i) rhs[i] -= je * f1[i];
        kernels::BandedLU lu = composed_operator_banded(ops, je * je);
        lu.factor();
        if (lu.singular() || lu.max_pivot() > 1e12 * std::max(lu.min_pivot(), 1e-300))
            throw ResonanceError("series: near-singular system at order " +
                                 std::to_string(j));
        lu.solve(rhs); // rhs := z1 in v representation
        ops.apply_v(LSign::plus, rhs, tmp);
        RadialField Zj(grid);
        for (std::size_t i = 0; i < n; ++i) {
            const double z2 = (tmp[i] - f2[i]) / je;
            Zj[i] = cplx(rhs[i], z2) / grid->node(i);
        }
        sp.Z.push_back(Zj);
    }

    // measure the truncation-residual decay exponent on a time grid
    std::vector<double> ts, lr;
    const double t_lo = std::log(1e2) / e, t_hi = std::log(1e4) / e;
    for (int s = 0; s < 12; ++s) {
        const double t = t_lo + (t_hi - t_lo) * (double)s / 11.0;
        const RadialField V = sp.at_time(t);
        // dV/dt = sum -je X^j Z_j
        RadialField dV(grid);
        const double X = std::exp(-e * t);
        double Xj = 1.0;
        for (int j = 1; j <= k; ++j) {
            Xj *= X;
            for (std::size_t i = 0; i < n; ++i)
                dV[i] += -((double)j * e) * Xj * sp.Z[(std::size_t)j - 1][i];
        }
        // i L V: components (-L_minus v2, L_plus v1)
        RadialField re(grid), im(grid);
        for (std::size_t i = 0; i < n; ++i) {
            re[i] = V[i].real();
            im[i] = V[i].imag();
        }
        const RadialField Lre = ops.apply(LSign::plus, re);
        const RadialField Lim = ops.apply(LSign::minus, im);
        const RadialField NV = nonlinear_remainder(ops, V);
        RadialField res(grid);
        for (std::size_t i = 0; i < n; ++i) {
            const cplx iLV(-Lim[i].real(), Lre[i].real());
            res[i] = dV[i] + iLV - NV[i];
        }
        const double rn = std::sqrt(l2_norm_sq(res));
        if (rn > 0) {
            ts.push_back(t);
            lr.push_back(std::log(rn));
        }
    }
    // least squares slope
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sx += ts[i];
        sy += lr[i];
        sxx += ts[i] * ts[i];
        sxy += ts[i] * lr[i];
        syy += lr[i] * lr[i];
    }
    const double m = (double)ts.size();
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    sp.residual_exponent = -slope;
    const double denom = (m * sxx - sx * sx) * (m * syy - sy * sy);
    sp.residual_r2 = denom > 0 ? (m * sxy - sx * sy) * (m * sxy - sx * sy) / denom : 0.0;
    return sp;
}

RadialField make_special_initial_data(const SeriesProfile& series, double t0,
                                      const GroundState& gs) {
    const RadialField V = series.at_time(t0);
    const double vn = h1_norm(V);
    const double qn = h1_norm(gs.Q);
    if (vn > 0.1 * qn)
        throw InputError("special data: t0 too small, ||V||_H1 = " +
                         std::to_string(vn) + " exceeds 0.1 ||Q||_H1");
    RadialField out = gs.Q;
    out += V;
    return out;
}

RateFit fit_decay_rate(const std::vector<double>& times,
                       const std::vector<double>& dist, double t0, double t1,
                       double noise_floor) {
    std::vector<double> ts, ld;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (t < t0 || t > t1) continue;
        if (!(dist[i] > 10.0 * noise_floor)) continue;
        ts.push_back(t);
        ld.push_back(std::log(dist[i]));
    }
    if (ts.size() < 10)
        throw InputError("fit_decay_rate: fewer than 10 usable samples in window");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double m = (double)ts.size();
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sx += ts[i];
        sy += ld[i];
        sxx += ts[i] * ts[i];
        sxy += ts[i] * ld[i];
        syy += ld[i] * ld[i];
    }
    RateFit f;
    f.samples = ts.size();
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    f.rate = -slope;
    const double denom = (m * sxx - sx * sx) * (m * syy - sy * sy);
    f.r2 = denom > 0 ? (m * sxy - sx * sy) * (m * sxy - sx * sy) / denom : 0.0;
    return f;
}

RadialField threshold_projection(const RadialField& u, const GroundState& gs) {
    const FunctionalValues target = evaluate(gs.Q, gs.omega);
    const double Mt = target.mass, Et = target.energy;
    const double e_scale = std::max(std::abs(Et), 1e-6 * Mt);
    {
        const FunctionalValues f0 = evaluate(u, gs.omega);
        if (std::abs(f0.mass - Mt) > 0.1 * Mt ||
            std::abs(f0.energy - Et) > 0.1 * std::max(std::abs(Et), Mt))
            throw UsageError("threshold_projection: data not within 10% of the target");
    }
    double a = 1.0, lam = 1.0;
    auto G = [&](double aa, double ll, double& gm, double& ge) {
        RadialField w = scale(u, ll);
        w *= cplx(aa);
        const FunctionalValues f = evaluate(w, gs.omega);
        gm = (f.mass - Mt) / Mt;
        ge = (f.energy - Et) / e_scale;
    };
    double gm, ge;
    G(a, lam, gm, ge);
    for (int it = 0; it < 60; ++it) {
        if (std::abs(gm) <= 1e-10 && std::abs(ge) * e_scale <= 1e-10 * std::max(std::abs(Et), Mt))
            break;
        const double da = 1e-7, dl = 1e-7;
        double gmp, gep, gmm, gem;
        G(a + da, lam, gmp, gep);
        G(a - da, lam, gmm, gem);
        const double J11 = (gmp - gmm) / (2 * da), J21 = (gep - gem) / (2 * da);
        G(a, lam + dl, gmp, gep);
        G(a, lam - dl, gmm, gem);
        const double J12 = (gmp - gmm) / (2 * dl), J22 = (gep - gem) / (2 * dl);
        const double det = J11 * J22 - J12 * J21;
        if (std::abs(det) < 1e-14)
            throw ProjectionError("threshold_projection: singular Jacobian");
        const double step_a = (J22 * gm - J12 * ge) / det;
        const double step_l = (-J21 * gm + J11 * ge) / det;
        double damp = 1.0;
        for (int h = 0; h < 20; ++h) {
            const double a_try = a - damp * step_a;
            const double l_try = lam - damp * step_l;
            if (l_try > 0 && a_try > 0) {
                double gm_try, ge_try;
                G(a_try, l_try, gm_try, ge_try);
                if (std::hypot(gm_try, ge_try) < std::hypot(gm, ge) || damp < 1e-3) {
                    a = a_try;
                    lam = l_try;
                    gm = gm_try;
                    ge = ge_try;
                    break;
                }
            }
            damp *= 0.5;
            if (h == 19) throw ProjectionError("threshold_projection: no progress");
        }
        if (it == 59)
            throw ProjectionError("threshold_projection: did not reach 1e-10 targets");
    }
    RadialField w = scale(u, lam);
    w *= cplx(a);
    return w;
}

const char* to_string(Label l) {
    switch (l) {
        case Label::Blowup: return "Blowup";
        case Label::Scatter: return "Scatter";
        case Label::Trapped: return "Trapped";
        default: return "Undecided";
    }
}

ClassificationResult classify(const RadialField& psi0, const GroundState& gs,
                              const InternalMode& mode, const RadialField& dQ,
                              const LinearizedOperators& ops,
                              const ClassifyOptions& opt) {
    ClassificationResult res;
    res.K0 = evaluate(psi0, gs.omega).K;

    ModulationContext ctx;
    ctx.gs = &gs;
    ctx.mode = &mode;
    ctx.dQ = &dQ;
    ctx.ops = &ops;
    ctx.mcfg = opt.mcfg;
    res.trajectory = evolve(psi0, opt.evolve, &ctx);
    const TrajectoryRecord& tr = res.trajectory;
    res.evolve_verdict = tr.verdict;
    res.T_est = tr.T_est;

    int flips = 0;
    for (std::size_t i = 1; i < tr.rows.size(); ++i)
        if (tr.rows[i].K * tr.rows[i - 1].K < 0.0) ++flips;
    res.K_sign_flips = flips;

    std::vector<double> d, dist, times;
    for (const auto& r : tr.rows) {
        d.push_back(r.d_omega);
        dist.push_back(r.dist_orbit);
        times.push_back(std::abs(r.t));
    }
    const std::vector<double> dtilde = modified_distance(d, dist, opt.mcfg.gamma_tilde);
    res.one_pass = one_pass_monitor(dtilde, opt.one_pass_R);
    res.d_final = dtilde.back();
    res.d_max = *std::max_element(dtilde.begin(), dtilde.end());

    if (tr.verdict == Verdict::BlowupDetected) {
        res.label = Label::Blowup;
        return res;
    }
    if (tr.verdict == Verdict::ScatterProxy) {
        res.label = Label::Scatter;
        return res;
    }
    // trapped: ends inside the switching radius, either at the noise floor
    // throughout or decaying with a positive fitted rate
    if (res.d_final < opt.mcfg.gamma_tilde) {
        if (res.d_max <= 10.0 * opt.noise_floor) {
            res.label = Label::Trapped;
            return res;
        }
        try {
            const double Tend = times.back();
            const RateFit f = fit_decay_rate(times, dtilde, 0.0, Tend, opt.noise_floor);
            res.fitted_rate = f.rate;
            if (f.rate > 0) {
                res.label = Label::Trapped;
                return res;
            }
        } catch (const InputError&) {
            // not enough usable samples: fall through to Undecided
        }
    }
    res.label = Label::Undecided;
    return res;
}

} // namespace cqnls
