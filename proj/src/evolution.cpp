#include "cqnls/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cqnls/kernels.hpp"

namespace cqnls {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Completed: return "Completed";
        case Verdict::BlowupDetected: return "BlowupDetected";
        case Verdict::ScatterProxy: return "ScatterProxy";
        default: return "Undecided";
    }
}

// ---- virial weight ----

VirialWeight::VirialWeight() {
    // solve the quintic blend H(t) = 1 + 2L t + L^2 t^2 + a3 t^3 + a4 t^4
    // + a5 t^5 with H(1) = H'(1) = H''(1) = 0 for increasing L until the
    // caps phi >= 0 and phi'' <= 2 hold on a fine grid
    for (double L : {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0}) {
        const double s0 = -(1.0 + 2.0 * L + L * L);
        const double s1 = -(2.0 * L + 2.0 * L * L);
        const double s2 = -L * L; // = 3 a3 + 6 a4 + 10 a5
        // [1 1 1; 3 4 5; 3 6 10] (a3,a4,a5) = (s0, s1, s2)
        const double a5 = s2 - 3.0 * s0 - (s1 - 3.0 * s0) * 3.0;
        const double a4 = (s1 - 3.0 * s0) - 2.0 * a5;
        const double a3 = s0 - a4 - a5;
        L_ = L;
        a3_ = a3;
        a4_ = a4;
        a5_ = a5;
        bool ok = true;
        for (int i = 0; i <= 10000 && ok; ++i) {
            const double rho = 1.0 + L * (double)i / 10000.0;
            if (phi(rho) < -1e-12 || d2phi(rho) > 2.0 + 1e-12) ok = false;
        }
        if (ok) return;
    }
    throw NumericError("virial weight: no admissible transition width found");
}

double VirialWeight::H(double t) const {
    return 1.0 + 2.0 * L_ * t + L_ * L_ * t * t + a3_ * t * t * t +
           a4_ * t * t * t * t + a5_ * t * t * t * t * t;
}
double VirialWeight::H1(double t) const {
    return 2.0 * L_ + 2.0 * L_ * L_ * t + 3.0 * a3_ * t * t +
           4.0 * a4_ * t * t * t + 5.0 * a5_ * t * t * t * t;
}
double VirialWeight::H2(double t) const {
    return 2.0 * L_ * L_ + 6.0 * a3_ * t + 12.0 * a4_ * t * t +
           20.0 * a5_ * t * t * t;
}
double VirialWeight::H3(double t) const {
    return 6.0 * a3_ + 24.0 * a4_ * t + 60.0 * a5_ * t * t;
}
double VirialWeight::H4(double t) const { return 24.0 * a4_ + 120.0 * a5_ * t; }

double VirialWeight::phi(double rho) const {
    if (rho <= 1.0) return rho * rho;
    if (rho >= 1.0 + L_) return 0.0;
    return H((rho - 1.0) / L_);
}
double VirialWeight::dphi(double rho) const {
    if (rho <= 1.0) return 2.0 * rho;
    if (rho >= 1.0 + L_) return 0.0;
    return H1((rho - 1.0) / L_) / L_;
}
double VirialWeight::d2phi(double rho) const {
    if (rho <= 1.0) return 2.0;
    if (rho >= 1.0 + L_) return 0.0;
    return H2((rho - 1.0) / L_) / (L_ * L_);
}
double VirialWeight::lap(double rho) const {
    if (rho <= 1.0) return 6.0;
    if (rho >= 1.0 + L_) return 0.0;
    return d2phi(rho) + 2.0 * dphi(rho) / rho;
}
double VirialWeight::bilap(double rho) const {
    if (rho <= 1.0 || rho >= 1.0 + L_) return 0.0;
    const double t = (rho - 1.0) / L_;
    const double p3 = H3(t) / (L_ * L_ * L_);
    const double p4 = H4(t) / (L_ * L_ * L_ * L_);
    return p4 + 4.0 * p3 / rho;
}

// ---- stepping ----

RadialField step(const RadialField& psi, double dt, double fixed_point_tol,
                 int fixed_point_max) {
    if (dt == 0.0) throw UsageError("step: dt must be nonzero");
    if (dt < 0.0) {
        // conjugation symmetry: one backward step = conj(step(conj psi, -dt))
        return step(psi.conjugated(), -dt, fixed_point_tol, fixed_point_max).conjugated();
    }
    const auto& g = *psi.grid();
    const std::size_t n = g.n();
    const double h2 = g.spacing() * g.spacing();
    const cplx idt(0.0, 1.0 / dt);

    std::vector<cplx> v(n), vnew(n), mid(n);
    std::vector<double> W(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = g.node(i) * psi[i];
    vnew = v;

    const double off = 0.5 / h2;
    std::vector<cplx> dl(n - 1, cplx(off)), du(n - 1, cplx(off)), diag(n), rhs(n);

    double vmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) vmax = std::max(vmax, std::abs(v[i]));

    bool converged = false;
    for (int it = 0; it < fixed_point_max && !converged; ++it) {
        for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (v[i] + vnew[i]) / g.node(i);
        kernels::cubic_quintic_weight(mid, W);
        // (i/dt) v+ + 1/2 (D2 + W) v+ = (i/dt) v - 1/2 (D2 + W) v
        for (std::size_t i = 0; i < n; ++i) {
            diag[i] = idt + 0.5 * (-2.0 / h2 + W[i]);
            const cplx vm = i == 0 ? cplx(0.0) : v[i - 1];
            const cplx vp = i + 1 == n ? cplx(0.0) : v[i + 1];
            rhs[i] = idt * v[i] - 0.5 * ((vm - 2.0 * v[i] + vp) / h2 + W[i] * v[i]);
        }
        std::vector<cplx> sol(rhs);
        kernels::solve_tridiag(dl, diag, du, sol);
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            delta = std::max(delta, std::abs(sol[i] - vnew[i]));
        vnew.swap(sol);
        if (delta <= fixed_point_tol * std::max(vmax, 1e-300)) converged = true;
    }
    if (!converged)
        throw StepRejectError("implicit midpoint fixed point did not converge");

    RadialField out(psi.grid());
    for (std::size_t i = 0; i < n; ++i) out[i] = vnew[i] / g.node(i);
    return out;
}

std::vector<cplx> radial_derivative(const RadialField& u) {
    const auto& g = *u.grid();
    const std::size_t n = g.n();
    const double h = g.spacing();
    std::vector<cplx> d(n);
    if (n < 3) throw UsageError("radial_derivative: grid too small");
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
    return d;
}

VirialDiagnostics localized_virial(const RadialField& psi, double R) {
    static const VirialWeight w;
    const auto& g = *psi.grid();
    if (!(R > 0.0) || R >= 0.5 * g.r_max())
        throw UsageError("localized_virial: need 0 < R < r_max/2");
    const std::size_t n = g.n();
    const auto du = radial_derivative(psi);
    VirialDiagnostics out;
    std::vector<double> f1(n), f2(n), f3(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = g.node(i);
        const double rho = r / R;
        const double wgt = g.weights()[i];
        const double m2 = std::norm(psi[i]);
        out.y_R += wgt * R * R * w.phi(rho) * m2;
        out.y_R_prime += wgt * 2.0 * R * w.dphi(rho) * (du[i] * std::conj(psi[i])).imag();
        const double gsq = std::norm(du[i]);
        // A_R = 4 I[(phi''-2)|grad|^2] - I[(lap phi - 6)|psi|^4]
        //       - 4/3 I[(lap phi - 6)|psi|^6] - 1/R^2 I[bilap phi |psi|^2]
        out.A_R += wgt * (4.0 * (w.d2phi(rho) - 2.0) * gsq -
                          (w.lap(rho) - 6.0) * m2 * m2 -
                          4.0 / 3.0 * (w.lap(rho) - 6.0) * m2 * m2 * m2 -
                          w.bilap(rho) * m2 / (R * R));
    }
    return out;
}

namespace {

Diagnostics make_diagnostics(const RadialField& psi, double t, double R_virial,
                             const ModulationContext* ctx) {
    Diagnostics d;
    d.t = t;
    const NormReport nr = norms(psi);
    d.mass = 0.5 * nr.l2_sq;
    d.energy = 0.5 * nr.grad_sq - 0.25 * nr.l4_4 - nr.l6_6 / 6.0;
    d.K = nr.grad_sq - 0.75 * nr.l4_4 - nr.l6_6;
    d.grad_sq = nr.grad_sq;
    d.l4_4 = nr.l4_4;
    d.l6_6 = nr.l6_6;
    const auto& g = *psi.grid();
    const auto du = radial_derivative(psi);
    double var = 0.0, mom = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i) {
        const double r = g.node(i);
        var += g.weights()[i] * r * r * std::norm(psi[i]);
        mom += g.weights()[i] * r * (du[i] * std::conj(psi[i])).imag();
    }
    d.variance = var;
    d.momentum = mom;
    if (R_virial > 0.0 && R_virial < 0.5 * g.r_max()) {
        const VirialDiagnostics vd = localized_virial(psi, R_virial);
        d.y_R = vd.y_R;
        d.y_R_prime = vd.y_R_prime;
        d.A_R = vd.A_R;
    }
    if (ctx && ctx->gs) {
        d.dist_orbit = dist_to_orbit(psi, ctx->gs->Q);
        try {
            const ModulationState st = decompose(psi, *ctx->gs, *ctx->mode,
                                                 *ctx->dQ, *ctx->ops, ctx->mcfg, t);
            d.d_omega = st.d_omega;
        } catch (const std::exception&) {
            d.d_omega = std::nan(""); // mass drifted (sponge) or gauge degenerate
        }
    }
    return d;
}

std::vector<double> sponge_mask(const RadialGrid& g, const SpongeConfig& sp, double dt) {
    std::vector<double> m(g.n(), 1.0);
    const double r0 = (1.0 - sp.width_frac) * g.r_max();
    for (std::size_t i = 0; i < g.n(); ++i) {
        const double r = g.node(i);
        if (r > r0) {
            const double x = (r - r0) / (g.r_max() - r0);
            const double s = x * x * (3.0 - 2.0 * x);
            m[i] = std::exp(-dt * sp.strength * s);
        }
    }
    return m;
}

} // namespace

TrajectoryRecord evolve(const RadialField& psi0, const EvolveConfig& cfg,
                        const ModulationContext* ctx) {
    if (!psi0.finite()) throw InputError("evolve: initial data contains NaN/Inf");
    if (cfg.t_end == 0.0) {
        TrajectoryRecord tr;
        tr.verdict = Verdict::Completed;
        tr.final_state = psi0;
        tr.times.push_back(0.0);
        tr.rows.push_back(make_diagnostics(psi0, 0.0, 0.25 * psi0.grid()->r_max(), ctx));
        return tr;
    }
    const bool backward = cfg.t_end < 0.0;
    // backward run: evolve the conjugate forward, flip time and momentum
    RadialField state = backward ? psi0.conjugated() : psi0;
    const double T = std::abs(cfg.t_end);
    const double R_virial = 0.25 * psi0.grid()->r_max();

    TrajectoryRecord tr;
    auto record = [&](double t, double dt) {
        Diagnostics d = make_diagnostics(state, backward ? -t : t, R_virial, ctx);
        if (backward) d.momentum = -d.momentum;
        d.dt = dt;
        tr.times.push_back(d.t);
        tr.rows.push_back(d);
    };

    double t = 0.0, dt = cfg.dt0;
    const double grad0 = norms(state).grad_sq;
    const double adapt_c = cfg.adapt_c > 0.0 ? cfg.adapt_c : cfg.dt0 * grad0;
    record(0.0, dt);

    int since_record = 0;
    int grad_up = 0;
    double grad_prev = grad0;
    std::vector<double> mask;
    double mask_dt = -1.0;
    bool tripped_blowup = false;

    for (std::size_t steps = 0; steps < cfg.max_steps && t < T; ++steps) {
        if (cfg.adapt) {
            const double gnow = grad_prev;
            dt = std::min(cfg.dt0, adapt_c / std::max(gnow, 1e-300));
        }
        dt = std::min(dt, T - t);
        bool accepted = false;
        while (!accepted) {
            try {
                RadialField next = step(state, dt, cfg.fixed_point_tol, cfg.fixed_point_max);
                state = std::move(next);
                accepted = true;
            } catch (const StepRejectError&) {
                dt *= 0.5;
                if (dt < cfg.dt_floor) break;
            }
        }
        if (!accepted) {
            const double gnow = norms(state).grad_sq;
            if (gnow > cfg.grad_blowup_factor * grad0) {
                tr.verdict = Verdict::BlowupDetected;
                tr.T_est = backward ? -t : t;
                tr.note = "dt underflow with gradient growth";
            } else {
                tr.verdict = Verdict::Undecided;
                tr.note = "step rejection cascade below dt_floor";
            }
            record(t, dt);
            tr.final_state = backward ? state.conjugated() : state;
            return tr;
        }
        t += dt;
        if (cfg.sponge.enabled) {
            if (mask_dt != dt) {
                mask = sponge_mask(*state.grid(), cfg.sponge, dt);
                mask_dt = dt;
            }
            kernels::mask_multiply(mask, state.samples());
        }

        const double gnow = norms(state).grad_sq;
        grad_up = gnow > grad_prev ? grad_up + 1 : 0;
        grad_prev = gnow;
        if (gnow > cfg.grad_blowup_factor * grad0 && grad_up >= cfg.blowup_consecutive) {
            record(t, dt);
            tr.verdict = Verdict::BlowupDetected;
            tr.T_est = backward ? -t : t;
            tripped_blowup = true;
            break;
        }
        if (++since_record >= cfg.record_every || t >= T) {
            record(t, dt);
            since_record = 0;
        }
    }
    if (!tripped_blowup) {
        if (tr.times.empty() || std::abs(tr.times.back()) < T - 1e-12) record(t, dt);
        tr.verdict = detect_scatter(tr) ? Verdict::ScatterProxy : Verdict::Completed;
    }
    tr.final_state = backward ? state.conjugated() : state;
    return tr;
}

std::pair<double, double> conserved_drift(const TrajectoryRecord& traj) {
    if (traj.verdict == Verdict::Undecided)
        throw UsageError("conserved_drift: trajectory is Undecided");
    if (traj.rows.empty()) return {0.0, 0.0};
    const double m0 = traj.rows.front().mass;
    const double e0 = traj.rows.front().energy;
    double dm = 0.0, de = 0.0;
    for (const auto& r : traj.rows) {
        dm = std::max(dm, std::abs(r.mass - m0) / std::max(std::abs(m0), 1e-300));
        de = std::max(de, std::abs(r.energy - e0) / std::max(std::abs(e0), 1e-300));
    }
    return {dm, de};
}

bool detect_scatter(const TrajectoryRecord& traj, double exit_radius) {
    if (traj.rows.size() < 4) return false;
    // (a) K > 0 on the tail half of the run
    const std::size_t half = traj.rows.size() / 2;
    for (std::size_t i = half; i < traj.rows.size(); ++i)
        if (traj.rows[i].K <= 0.0) return false;
    // (b) L4 norm decayed by >= 10x from its maximum
    double l4max = 0.0;
    for (const auto& r : traj.rows) l4max = std::max(l4max, r.l4_4);
    if (!(traj.rows.back().l4_4 <= 0.1 * l4max)) return false;
    // (c) when a modulation distance is available: exited past the one-pass
    // radius and never came back
    std::vector<double> d, dist;
    bool have_d = false;
    for (const auto& r : traj.rows) {
        d.push_back(r.d_omega);
        dist.push_back(r.dist_orbit);
        if (std::isfinite(r.d_omega)) have_d = true;
    }
    if (have_d && std::isfinite(dist.front())) {
        const std::vector<double> dt = modified_distance(d, dist, exit_radius);
        if (one_pass_monitor(dt, exit_radius) != OnePassVerdict::Exited) return false;
    }
    return true;
}

} // namespace cqnls
