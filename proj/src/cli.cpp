#include "cqnls/cli.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "cqnls/io.hpp"
#include "cqnls/special.hpp"

namespace cqnls {

namespace {

struct CommonOpts {
    double r_max = 0;  // 0: derived from omega
    long n = 0;        // 0: derived from omega
    std::string out_dir;
    std::string config_file;
    std::vector<std::string> overrides;
    bool print_config = false;
    int workers = 0;
};



Config assemble_config(const CommonOpts& c) {
    Config cfg;
    cfg.set("grid.n", c.n > 0 ? std::to_string(c.n) : "0");
    cfg.set("grid.r_max", c.r_max > 0 ? fmt17(c.r_max) : "auto");
    cfg.set("branch.omega_min", "0.01");
    cfg.set("branch.omega_max", "0.25");
    cfg.set("evolve.dt0", "0.001");
    cfg.set("evolve.dt_floor", "1e-9");
    cfg.set("evolve.grad_blowup_factor", "1000");
    cfg.set("evolve.record_every", "10");
    cfg.set("evolve.sponge.strength", "1.0");
    cfg.set("evolve.sponge.width_frac", "0.1");
    cfg.set("modulation.delta_E", "0.1");
    cfg.set("modulation.gamma_tilde", "0.05");
    cfg.set("one_pass.R", "0.1");
    cfg.set("special.k", "3");
    cfg.set("seed", "1234");
    if (!c.config_file.empty()) {
        const Config file = Config::from_file(c.config_file);
        // file entries override built-in defaults
        for (const auto& line : [&] {
                 std::vector<std::string> ls;
                 std::stringstream ss(file.printed());
                 std::string l;
                 while (std::getline(ss, l))
                     if (!l.empty()) ls.push_back(l);
                 return ls;
             }())
            cfg.apply_override(line);
    }
    for (const auto& o : c.overrides) cfg.apply_override(o);
    if (c.out_dir.empty()) cfg.set("out_dir", output_root());
    else cfg.set("out_dir", c.out_dir);
    return cfg;
}

GridPtr make_grid(const Config& cfg, double omega) {
    const GridSuggestion sg = suggest_grid(omega);
    const std::string rm = cfg.get("grid.r_max", "auto");
    const double r_max = rm == "auto" ? sg.r_max : std::stod(rm);
    const long n = cfg.get_long("grid.n", 0);
    return build_grid(r_max, n > 0 ? (std::size_t)n : sg.n);
}

void print_error_json(const std::string& type, std::string msg) {
    for (char& c : msg)
        if (c == '"') c = '\'';
    std::printf("{\"error\":{\"type\":\"%s\",\"message\":\"%s\"}}\n", type.c_str(),
                msg.c_str());
}

struct SpectralBundle {
    GroundState gs;
    InternalMode mode;
    RadialField dQ;
    std::unique_ptr<LinearizedOperators> ops;
};

SpectralBundle make_bundle(double omega, GridPtr grid) {
    SpectralBundle b;
    b.gs = solve_ground_state(omega, grid);
    b.ops = std::make_unique<LinearizedOperators>(b.gs);
    b.mode = solve_internal_mode(*b.ops);
    b.dQ = domega_Q(b.gs, grid);
    return b;
}

// ---- check suite ----

struct CheckRow {
    std::string name;
    bool pass;
    std::string detail;
};

void add(std::vector<CheckRow>& rows, const std::string& name, bool pass,
         const std::string& detail) {
    rows.push_back({name, pass, detail});
}

std::vector<CheckRow> run_check_suite(double omega, bool fast, const Config& cfg) {
    std::vector<CheckRow> rows;
    std::mt19937_64 rng((std::uint64_t)cfg.get_long("seed", 1234));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    const std::size_t n_small = fast ? 400 : 1200;
    GridPtr gsm = build_grid(20.0, n_small);

    // quadrature: exact on densities whose r^2-weighted integrand is
    // piecewise linear on the closed grid (linear continuation onto the
    // final half cell)
    {
        const std::size_t n = gsm->n();
        std::vector<double> gval(n + 2, 0.0);
        for (std::size_t i = 1; i <= n; ++i) gval[i] = unif(rng);
        gval[n + 1] = 2.0 * gval[n] - gval[n - 1];
        double exact = 0.0;
        for (std::size_t i = 0; i + 1 < gval.size(); ++i)
            exact += 0.5 * (gval[i] + gval[i + 1]) * gsm->spacing();
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = gval[i + 1] / (4.0 * std::numbers::pi * gsm->node(i) * gsm->node(i));
        set_warn_enabled(false);
        const double got = integrate(*gsm, f);
        set_warn_enabled(true);
        const double err = std::abs(got - exact) / std::max(1.0, std::abs(exact));
        add(rows, "quadrature_pw_linear_exact", err < 1e-13, "rel err " + fmt9(err));
    }
    // integrate linearity
    {
        RadialField f(gsm), g(gsm);
        for (std::size_t i = 0; i < gsm->n(); ++i) {
            f[i] = unif(rng) * std::exp(-0.3 * gsm->node(i));
            g[i] = unif(rng) * std::exp(-0.2 * gsm->node(i));
        }
        const double a = 1.7, b = -0.4;
        RadialField h = f;
        h *= cplx(a);
        RadialField gb = g;
        gb *= cplx(b);
        h += gb;
        const double lhs = integrate(h);
        const double rhs = a * integrate(f) + b * integrate(g);
        const double err = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
        add(rows, "integrate_linear", err < 1e-13, "rel err " + fmt9(err));
    }
    // laplacian symmetry
    {
        RadialField u = sample_field(gsm, [](double r) { return std::exp(-0.5 * r * r); });
        RadialField w = sample_field(gsm, [](double r) { return r * std::exp(-r); });
        const double a = l2_pairing(apply_radial_laplacian(u), w).real();
        const double b = l2_pairing(u, apply_radial_laplacian(w)).real();
        const double err = std::abs(a - b) / std::max(std::abs(a), 1e-300);
        add(rows, "laplacian_symmetric", err < 1e-10, "rel err " + fmt9(err));
    }
    // functional identities on a random smooth field
    {
        RadialField u = sample_field(gsm, [&](double r) {
            return (1.0 + 0.3 * std::sin(3 * r)) * std::exp(-0.4 * r * r);
        });
        const FunctionalValues f = evaluate(u, omega);
        const double id1 = std::abs(f.action - (f.energy + omega * f.mass));
        const double id2 = std::abs(f.J - (f.action - 0.5 * f.K));
        const double sc = std::abs(f.action) + 1.0;
        add(rows, "functional_identities", id1 / sc < 1e-12 && id2 / sc < 1e-12,
            "S-E-wM " + fmt9(id1) + ", J-S+K/2 " + fmt9(id2));
    }
    // scaling: mass invariance and K scaling law vs resampled field
    {
        RadialField u = sample_field(gsm, [](double r) { return std::exp(-0.5 * r * r); });
        const FunctionalValues f0 = evaluate(u, 1.0);
        const RadialField u3 = scale(u, 3.0);
        const double dm = std::abs(evaluate(u3, 1.0).mass - f0.mass) / f0.mass;
        const double k2 = evaluate(scale(u, 2.0), 1.0).K;
        const double k2law = K_of_scaling(f0.norms, 2.0);
        const double kerr = std::abs(k2 - k2law) / std::max(1.0, std::abs(k2law));
        add(rows, "scaling_laws", dm < 1e-6 && kerr < 1e-4,
            "mass drift " + fmt9(dm) + ", K err " + fmt9(kerr));
    }
    // lambda_star bracketing
    {
        RadialField u = sample_field(gsm, [](double r) { return std::exp(-0.5 * r * r); });
        const double ls = lambda_star(u);
        const NormReport base = norms(u);
        const bool sign_ok = K_of_scaling(base, 0.9 * ls) > 0 && K_of_scaling(base, 1.1 * ls) < 0;
        add(rows, "lambda_star_sign_pattern", sign_ok && std::abs(ls - 1.543) < 2e-3,
            "lambda " + fmt9(ls));
    }
    // action gradient vs directional derivative
    {
        RadialField u = sample_field(gsm, [](double r) { return std::exp(-0.5 * r * r); });
        RadialField hdir = sample_field(gsm, [](double r) { return r * std::exp(-r); });
        const double eps = 1e-5;
        RadialField up = u, um = u;
        RadialField he = hdir;
        he *= cplx(eps);
        up += he;
        um -= he;
        const double fd = (evaluate(up, omega).action - evaluate(um, omega).action) / (2 * eps);
        const double an = l2_pairing(action_gradient(u, omega), hdir).real();
        const double err = std::abs(fd - an) / std::max(std::abs(an), 1e-300);
        add(rows, "action_gradient_fd", err < 1e-6, "rel err " + fmt9(err));
    }
    // dist_to_orbit phase invariance
    {
        RadialField u = sample_field(gsm, [](double r) { return std::exp(-0.5 * r * r) * cplx(0.8, 0.6); });
        RadialField Q = sample_field(gsm, [](double r) { return std::exp(-r); });
        const double d1 = dist_to_orbit(u, Q);
        RadialField v = u;
        v *= std::polar(1.0, 1.234);
        const double d2 = dist_to_orbit(v, Q);
        add(rows, "dist_phase_invariant", std::abs(d1 - d2) < 1e-12 * (1 + d1),
            "delta " + fmt9(std::abs(d1 - d2)));
    }
    // symplectic form basics
    {
        RadialField u = sample_field(gsm, [](double r) { return cplx(std::exp(-0.5 * r * r), 0.2 * std::exp(-r)); });
        RadialField iu = u;
        iu *= cplx(0, 1);
        const double off = std::abs(symplectic_form(u, u));
        const double val = symplectic_form(u, iu) + l2_norm_sq(u);
        add(rows, "symplectic_form", off < 1e-12 && std::abs(val) < 1e-10 * (1 + l2_norm_sq(u)),
            "Omega(u,u) " + fmt9(off));
    }

    // spectral / modulation checks need the full bundle
    GridPtr grid = fast ? build_grid(suggest_grid(omega).r_max, 2000) : make_grid(cfg, omega);
    SpectralBundle b = make_bundle(omega, grid);
    {
        const FunctionalValues& v = b.gs.values;
        const bool ok = b.gs.residual < 1e-8 &&
                        std::abs(v.K) < 1e-6 * std::abs(v.action) &&
                        std::abs(v.action - v.J) < 1e-8 * std::abs(v.action);
        add(rows, "ground_state_identities", ok,
            "residual " + fmt9(b.gs.residual) + ", K/S " + fmt9(v.K / v.action));
    }
    {
        const NormReport& nr = b.gs.values.norms;
        const double nehari = nr.grad_sq + omega * nr.l2_sq - nr.l4_4 - nr.l6_6;
        const double rel = std::abs(nehari) / (nr.grad_sq + omega * nr.l2_sq);
        add(rows, "nehari_identity", rel < 1e-8, "rel " + fmt9(rel));
    }
    {
        const RadialField LmQ = b.ops->apply(LSign::minus, b.gs.Q);
        const double r1 = std::sqrt(l2_norm_sq(LmQ) / l2_norm_sq(b.gs.Q)) / omega;
        RadialField expect(b.gs.Q.grid());
        for (std::size_t i = 0; i < expect.size(); ++i) {
            const double q = b.gs.Q[i].real();
            expect[i] = -2.0 * q * q * q - 4.0 * q * q * q * q * q;
        }
        RadialField LpQ = b.ops->apply(LSign::plus, b.gs.Q);
        LpQ -= expect;
        const double r2 = std::sqrt(l2_norm_sq(LpQ) / std::max(l2_norm_sq(expect), 1e-300));
        add(rows, "operator_identities", r1 < 1e-6 && r2 < 1e-6,
            "L-Q " + fmt9(r1) + ", L+Q " + fmt9(r2));
    }
    {
        RadialField r = b.ops->apply(LSign::plus, b.dQ);
        r += b.gs.Q;
        const double rel = std::sqrt(l2_norm_sq(r) / l2_norm_sq(b.gs.Q));
        add(rows, "domega_equation", rel < 1e-3, "rel " + fmt9(rel));
    }
    {
        const SpectralReport sr = check_spectral_inequalities(b.mode, b.gs, &b.dQ);
        const bool ok = b.mode.residual_plus < 1e-6 && b.mode.residual_minus < 1e-6 &&
                        sr.orth_Q_Y1_ok && sr.pairing_positive && sr.signQ2_negative &&
                        std::abs(2.0 * b.mode.pairing - 1.0) < 1e-10;
        add(rows, "internal_mode", ok,
            "e " + fmt9(b.mode.e_omega) + ", res " + fmt9(b.mode.residual_plus));
        add(rows, "spectral_gap_inequality", sr.gap_ok,
            "lhs " + fmt9(sr.gap_lhs) + " rhs " + fmt9(sr.gap_rhs));
    }
    {
        // decomposition of an exact orbit point and reconstruction
        RadialField psi = b.gs.Q;
        psi *= std::polar(1.0, 0.7);
        const ModulationState st = decompose(psi, b.gs, b.mode, b.dQ, *b.ops);
        RadialField rec = reconstruct(st, b.gs, b.mode, b.dQ);
        rec -= psi;
        const double rel = std::sqrt(l2_norm_sq(rec) / l2_norm_sq(psi));
        const bool zero = std::abs(st.lambda_plus) < 1e-8 && std::abs(st.lambda_minus) < 1e-8 &&
                          std::abs(st.b) < 1e-6 && st.d_omega < 1e-5;
        add(rows, "decompose_orbit_point", rel < 1e-10 && zero,
            "reconstruct " + fmt9(rel) + ", d " + fmt9(st.d_omega));
    }
    {
        // d^2 = E(psi)-E(Q) + 2 e lambda1^2 on projected data
        RadialField pert = b.gs.Q;
        RadialField ym = b.mode.Yminus();
        ym *= cplx(1e-3);
        pert += ym;
        const RadialField psi = threshold_projection(pert, b.gs);
        const ModulationState st = decompose(psi, b.gs, b.mode, b.dQ, *b.ops);
        const double lhs = st.d_omega * st.d_omega;
        const double rhs = st.energy_psi - evaluate(b.gs.Q, omega).energy +
                           2.0 * b.mode.e_omega * st.lambda1 * st.lambda1;
        const double rel = std::abs(lhs - rhs) / std::max(lhs, 1e-300);
        add(rows, "distance_identity", rel < 1e-8, "rel " + fmt9(rel));
    }
    if (!fast) {
        // short standing-wave run: conservation
        EvolveConfig ec;
        ec.dt0 = 1e-3;
        ec.t_end = 1.0;
        ec.record_every = 50;
        const TrajectoryRecord tr = evolve(b.gs.Q, ec);
        const auto [dm, de] = conserved_drift(tr);
        add(rows, "standing_wave_conservation", dm < 1e-10 && de < 1e-8,
            "mass " + fmt9(dm) + ", energy " + fmt9(de));
        // orbit stays put
        const double d = dist_to_orbit(tr.final_state, b.gs.Q);
        add(rows, "standing_wave_orbit", d < 1e-6, "dist " + fmt9(d));
    }
    {
        // checkpoint round trip
        RadialField psi = b.gs.Q;
        psi *= std::polar(1.0, 0.3);
        const std::string p = join_path(cfg.get("out_dir", "."), "check_roundtrip.json");
        write_checkpoint(p, psi, omega, 0.0);
        const Checkpoint c1 = read_checkpoint(p);
        write_checkpoint(p, c1.psi, c1.omega, c1.t);
        const Checkpoint c2 = read_checkpoint(p);
        bool same = c1.psi.size() == c2.psi.size();
        for (std::size_t i = 0; same && i < c1.psi.size(); ++i)
            same = c1.psi[i] == c2.psi[i];
        std::remove(p.c_str());
        add(rows, "checkpoint_bit_exact", same, same ? "identical bytes" : "mismatch");
    }
    {
        // one-pass monitor basics
        const std::vector<double> zero(32, 0.0);
        bool ok = one_pass_monitor(zero, 0.1) == OnePassVerdict::Stayed;
        std::vector<double> grow;
        for (int i = 0; i < 32; ++i) grow.push_back(0.01 * std::exp(0.3 * i));
        ok = ok && one_pass_monitor(grow, 0.1) == OnePassVerdict::Exited;
        add(rows, "one_pass_monitor", ok, "");
    }
    return rows;
}

// ---- sweep ----

struct SweepRun {
    std::string name;
    double A = 0;       // series amplitude, 0 = none
    double eps = 0;     // direct mode perturbation amplitude
    double scale_pre = 1.0;
    double phase = 0;
    int direction = +1;
};

int cmd_classify_sweep(const Config& cfg, double omega, double t_end) {
    GridPtr grid = make_grid(cfg, omega);
    SpectralBundle b = make_bundle(omega, grid);
    const double e = b.mode.e_omega;
    const double t0 = std::log(1e3) / e;
    SeriesProfile plus = build_profile_series(+1.0, (int)cfg.get_long("special.k", 3), b.mode, *b.ops);
    SeriesProfile minus = build_profile_series(-1.0, (int)cfg.get_long("special.k", 3), b.mode, *b.ops);

    std::vector<SweepRun> runs = {
        {"orbit_0", 0, 0, 1.0, 0.0, +1},
        {"orbit_phase", 0, 0, 1.0, 1.1, +1},
        {"seriesP_fwd", +1, 0, 1.0, 0.0, +1},
        {"seriesM_fwd", -1, 0, 1.0, 0.0, +1},
        {"seriesP_bwd", +1, 0, 1.0, 0.0, -1},
        {"seriesM_bwd", -1, 0, 1.0, 0.0, -1},
        {"modeP_small", 0, +1e-3, 1.0, 0.0, +1},
        {"modeM_small", 0, -1e-3, 1.0, 0.0, +1},
        {"modeP_large", 0, +1e-2, 1.0, 0.4, +1},
        {"modeM_large", 0, -1e-2, 1.0, 0.4, +1},
        {"scaled_in", 0, +3e-3, 0.995, 0.0, +1},
        {"scaled_out", 0, -3e-3, 1.005, 0.0, +1},
    };

    std::string csv = "omega,A,direction,label,rate,e_omega\n";
    std::string outdir = cfg.get("out_dir", ".");
    int failures = 0;
    for (const auto& r : runs) {
        RadialField psi0 = b.gs.Q;
        if (r.A != 0) {
            const SeriesProfile& sp = r.A > 0 ? plus : minus;
            psi0 = make_special_initial_data(sp, t0, b.gs);
        } else if (r.eps != 0) {
            RadialField ym = b.mode.Yminus();
            ym *= cplx(r.eps);
            psi0 += ym;
        }
        if (r.scale_pre != 1.0) psi0 = scale(psi0, r.scale_pre);
        if (r.phase != 0.0) psi0 *= std::polar(1.0, r.phase);
        psi0 = threshold_projection(psi0, b.gs);

        ClassifyOptions opt;
        opt.evolve.dt0 = cfg.get_double("evolve.dt0", 1e-3);
        opt.evolve.t_end = r.direction > 0 ? t_end : -t_end;
        opt.evolve.record_every = (int)cfg.get_long("evolve.record_every", 10);
        opt.evolve.adapt = true;
        opt.mcfg.delta_E = cfg.get_double("modulation.delta_E", 0.1);
        opt.mcfg.gamma_tilde = cfg.get_double("modulation.gamma_tilde", 0.05);
        opt.one_pass_R = cfg.get_double("one_pass.R", 0.1);
        if (r.direction < 0 && ((r.A != 0 && evaluate(psi0, omega).K > 0) || r.eps > 0))
            opt.evolve.sponge.enabled = true;

        const ClassificationResult res =
            classify(psi0, b.gs, b.mode, b.dQ, *b.ops, opt);
        if (res.one_pass == OnePassVerdict::ReturnViolation) ++failures;
        csv += fmt9(omega) + "," + fmt9(r.A != 0 ? r.A : r.eps) + "," +
               (r.direction > 0 ? "forward" : "backward") + "," +
               to_string(res.label) + "," + fmt9(res.fitted_rate) + "," + fmt9(e) + "\n";
        std::printf("%-14s K0=% .3e  label=%-9s one_pass=%s\n", r.name.c_str(), res.K0,
                    to_string(res.label), to_string(res.one_pass));
    }
    write_text_file(join_path(outdir, "sweep_summary.csv"), csv);
    std::printf("sweep summary written; %d one-pass violations\n", failures);
    return failures == 0 ? 0 : 1;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"cubic-quintic radial NLS laboratory"};
    app.require_subcommand(0, 1);

    CommonOpts com;
    app.add_option("--rmax", com.r_max, "domain truncation radius (0 = auto)");
    app.add_option("--n", com.n, "number of interior grid nodes");
    app.add_option("--out-dir", com.out_dir, "output directory (default $CQNLS_OUT or .)");
    app.add_option("--config", com.config_file, "flat key=value config file");
    app.add_option("--set", com.overrides, "config override key=value")->take_all();
    app.add_flag("--print-config", com.print_config, "print effective config and exit");
    app.add_option("--workers", com.workers, "worker threads for sweeps");

    // groundstate
    auto* gsc = app.add_subcommand("groundstate", "solve the ground state at one frequency");
    double gs_omega = 0.1;
    bool cubic_only = false;
    std::string gs_out;
    gsc->add_option("--omega", gs_omega, "frequency")->required();
    gsc->add_flag("--cubic-only", cubic_only, "cubic validation mode");
    gsc->add_option("--out", gs_out, "fixture path");

    // branch
    auto* brc = app.add_subcommand("branch", "continue the ground-state branch");
    double br_lo = 0.02, br_hi = 0.2;
    long br_count = 10;
    std::string br_out;
    brc->add_option("--omega-min", br_lo);
    brc->add_option("--omega-max", br_hi);
    brc->add_option("--count", br_count);
    brc->add_option("--out", br_out, "branch CSV path");

    // spectrum
    auto* spc = app.add_subcommand("spectrum", "internal mode of the linearization");
    double sp_omega = 0.1;
    std::string sp_ground, sp_out;
    spc->add_option("--omega", sp_omega);
    spc->add_option("--ground", sp_ground, "ground-state fixture to reuse");
    spc->add_option("--out", sp_out, "spectrum fixture path");

    // evolve
    auto* evc = app.add_subcommand("evolve", "time integration with diagnostics");
    std::string ev_init = "gaussian", ev_ckpt_in, ev_csv, ev_ckpt_out;
    double ev_amp = 1e-3, ev_omega = 0.1, ev_tend = 10.0, ev_dt = 1e-3;
    bool ev_sponge = false;
    evc->add_option("--init", ev_init, "gaussian | groundstate | checkpoint");
    evc->add_option("--amp", ev_amp, "gaussian amplitude");
    evc->add_option("--omega", ev_omega);
    evc->add_option("--t-end", ev_tend);
    evc->add_option("--dt", ev_dt);
    evc->add_flag("--sponge", ev_sponge, "absorbing layer on");
    evc->add_option("--checkpoint-in", ev_ckpt_in);
    evc->add_option("--out", ev_csv, "trajectory CSV path");
    evc->add_option("--checkpoint-out", ev_ckpt_out);

    // special
    auto* spec_c = app.add_subcommand("special", "exponential-series special data report");
    double se_omega = 0.05, se_A = 1.0;
    long se_k = 3;
    std::string se_out;
    spec_c->add_option("--omega", se_omega);
    spec_c->add_option("--A", se_A);
    spec_c->add_option("--k", se_k);
    spec_c->add_option("--out", se_out, "report JSON path");

    // classify
    auto* clc = app.add_subcommand("classify", "threshold trichotomy harness");
    double cl_omega = 0.05, cl_A = 1.0, cl_tend = 0.0;
    std::string cl_dir = "forward", cl_out;
    bool cl_sweep = false;
    clc->add_option("--omega", cl_omega);
    clc->add_option("--A", cl_A);
    clc->add_option("--direction", cl_dir, "forward | backward");
    clc->add_option("--t-end", cl_tend, "run length (0 = auto)");
    clc->add_flag("--sweep", cl_sweep, "run the 12-condition sweep");
    clc->add_option("--out", cl_out, "label JSON path");

    // check
    auto* chc = app.add_subcommand("check", "run the invariant suite");
    double ch_omega = 0.05;
    bool ch_fast = false;
    chc->add_option("--omega", ch_omega);
    chc->add_flag("--fast", ch_fast);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        Config cfg = assemble_config(com);
        if (com.print_config) {
            std::fputs(cfg.printed().c_str(), stdout);
            return 0;
        }
#ifdef _OPENMP
        if (com.workers > 0) omp_set_num_threads(com.workers);
#endif
        const std::string outdir = cfg.get("out_dir", ".");

        if (gsc->parsed()) {
            GridPtr grid = make_grid(cfg, gs_omega);
            const GroundState gs = solve_ground_state(
                gs_omega, grid,
                cubic_only ? Nonlinearity::cubic_only : Nonlinearity::cubic_quintic);
            std::printf("omega      %s\n", fmt9(gs.omega).c_str());
            std::printf("q0         %s\n", fmt9(gs.q0).c_str());
            std::printf("mass       %s\n", fmt9(gs.values.mass).c_str());
            std::printf("energy     %s\n", fmt9(gs.values.energy).c_str());
            std::printf("K          %s\n", fmt9(gs.values.K).c_str());
            std::printf("m_omega    %s\n", fmt9(gs.values.action).c_str());
            std::printf("residual   %s\n", fmt9(gs.residual).c_str());
            const std::string path = gs_out.empty()
                ? join_path(outdir, "groundstate_omega" + fmt9(gs_omega) + ".json")
                : gs_out;
            write_ground_state_fixture(path, gs);
            std::printf("fixture    %s\n", path.c_str());
            return 0;
        }
        if (brc->parsed()) {
            if (br_count < 3) throw ConfigError("branch: need at least 3 frequencies");
            GridPtr grid = make_grid(cfg, br_lo);
            std::vector<double> omegas;
            for (long i = 0; i < br_count; ++i)
                omegas.push_back(br_lo + (br_hi - br_lo) * (double)i / (double)(br_count - 1));
            const GroundStateBranch br = continue_branch(omegas, grid);
            std::string csv = "omega,q0,mass,energy,action,mass_slope\n";
            for (std::size_t i = 0; i < br.states.size(); ++i) {
                double slope = std::nan("");
                for (std::size_t k = 0; k < br.slope_index.size(); ++k)
                    if (br.slope_index[k] == i) slope = br.mass_slope[k];
                csv += fmt17(br.omegas[i]) + "," + fmt17(br.states[i].q0) + "," +
                       fmt17(br.mass_curve[i]) + "," + fmt17(br.states[i].values.energy) +
                       "," + fmt17(br.states[i].values.action) + "," + fmt17(slope) + "\n";
                std::printf("omega %-10s q0 %-12s M %-12s dM/domega %-12s\n",
                            fmt9(br.omegas[i]).c_str(), fmt9(br.states[i].q0).c_str(),
                            fmt9(br.mass_curve[i]).c_str(), fmt9(slope).c_str());
            }
            const std::string path = br_out.empty() ? join_path(outdir, "branch.csv") : br_out;
            write_text_file(path, csv);
            return 0;
        }
        if (spc->parsed()) {
            GroundState gs;
            GridPtr grid;
            if (!sp_ground.empty()) {
                gs = read_ground_state_fixture(sp_ground);
                grid = gs.Q.grid();
                sp_omega = gs.omega;
            } else {
                grid = make_grid(cfg, sp_omega);
                gs = solve_ground_state(sp_omega, grid);
            }
            LinearizedOperators ops(gs);
            const InternalMode m = solve_internal_mode(ops);
            const RadialField dQ = domega_Q(gs, grid);
            const SpectralReport sr = check_spectral_inequalities(m, gs, &dQ);
            std::printf("omega      %s\n", fmt9(sp_omega).c_str());
            std::printf("e_omega    %s\n", fmt9(m.e_omega).c_str());
            std::printf("residuals  %s %s\n", fmt9(m.residual_plus).c_str(),
                        fmt9(m.residual_minus).c_str());
            std::printf("pairing    %s\n", fmt9(m.pairing).c_str());
            std::printf("(Q,Y2)     %s\n", fmt9(m.signQ2).c_str());
            std::printf("gap        %s >= %s : %s\n", fmt9(sr.gap_lhs).c_str(),
                        fmt9(sr.gap_rhs).c_str(), sr.gap_ok ? "yes" : "no");
            const std::string path = sp_out.empty()
                ? join_path(outdir, "spectrum_omega" + fmt9(sp_omega) + ".json")
                : sp_out;
            write_spectrum_fixture(path, sp_omega, m);
            return 0;
        }
        if (evc->parsed()) {
            RadialField psi0;
            double omega_ctx = ev_omega;
            if (ev_init == "gaussian") {
                GridPtr grid = com.r_max > 0 ? build_grid(com.r_max, (std::size_t)com.n)
                                             : build_grid(60.0, (std::size_t)com.n);
                psi0 = sample_field(grid, [&](double r) { return ev_amp * std::exp(-0.5 * r * r); });
            } else if (ev_init == "groundstate") {
                GridPtr grid = make_grid(cfg, ev_omega);
                psi0 = solve_ground_state(ev_omega, grid).Q;
            } else if (ev_init == "checkpoint") {
                if (ev_ckpt_in.empty()) throw ConfigError("evolve: --checkpoint-in required");
                const Checkpoint c = read_checkpoint(ev_ckpt_in);
                psi0 = c.psi;
                omega_ctx = c.omega;
            } else {
                throw ConfigError("evolve: unknown --init " + ev_init);
            }
            EvolveConfig ec;
            ec.dt0 = ev_dt;
            ec.t_end = ev_tend;
            ec.record_every = (int)cfg.get_long("evolve.record_every", 10);
            ec.sponge.enabled = ev_sponge;
            ec.sponge.strength = cfg.get_double("evolve.sponge.strength", 1.0);
            ec.sponge.width_frac = cfg.get_double("evolve.sponge.width_frac", 0.1);
            const TrajectoryRecord tr = evolve(psi0, ec);
            const std::string path = ev_csv.empty() ? join_path(outdir, "trajectory.csv") : ev_csv;
            write_trajectory_csv(path, tr);
            if (!ev_ckpt_out.empty())
                write_checkpoint(ev_ckpt_out, tr.final_state, omega_ctx, tr.times.back());
            if (tr.verdict != Verdict::BlowupDetected && tr.verdict != Verdict::Undecided) {
                const auto [dm, de] = conserved_drift(tr);
                std::printf("drift mass %s energy %s\n", fmt9(dm).c_str(), fmt9(de).c_str());
            }
            std::printf("verdict %s\n", to_string(tr.verdict));
            return 0;
        }
        if (spec_c->parsed()) {
            GridPtr grid = make_grid(cfg, se_omega);
            SpectralBundle b = make_bundle(se_omega, grid);
            const SeriesProfile sp = build_profile_series(se_A, (int)se_k, b.mode, *b.ops);
            const double t0 = std::log(1e3) / b.mode.e_omega;
            const RadialField psi0 = make_special_initial_data(sp, t0, b.gs);
            const FunctionalValues f = evaluate(psi0, se_omega);
            JsonWriter w;
            w.begin_object()
                .field("omega", se_omega)
                .field("A", se_A)
                .field("k", (long)se_k)
                .field("e_omega", b.mode.e_omega)
                .field("t0", t0)
                .field("residual_exponent", sp.residual_exponent)
                .field("residual_r2", sp.residual_r2)
                .field("K0", f.K)
                .field("mass_rel", f.mass / evaluate(b.gs.Q, se_omega).mass - 1.0)
                .end_object();
            const std::string path = se_out.empty()
                ? join_path(outdir, "special_report.json") : se_out;
            write_text_file(path, w.str() + "\n");
            std::printf("e_omega %s residual_exponent %s (expect ~%s)\n",
                        fmt9(b.mode.e_omega).c_str(), fmt9(sp.residual_exponent).c_str(),
                        fmt9((se_k + 1) * b.mode.e_omega).c_str());
            return 0;
        }
        if (clc->parsed()) {
            if (cl_sweep) {
                const double tend = cl_tend > 0 ? cl_tend : 60.0;
                return cmd_classify_sweep(cfg, cl_omega, tend);
            }
            GridPtr grid = make_grid(cfg, cl_omega);
            SpectralBundle b = make_bundle(cl_omega, grid);
            const SeriesProfile sp =
                build_profile_series(cl_A, (int)cfg.get_long("special.k", 3), b.mode, *b.ops);
            const double t0 = std::log(1e3) / b.mode.e_omega;
            RadialField psi0 = make_special_initial_data(sp, t0, b.gs);
            psi0 = threshold_projection(psi0, b.gs);
            ClassifyOptions opt;
            opt.evolve.dt0 = cfg.get_double("evolve.dt0", 1e-3);
            const bool backward = cl_dir == "backward";
            const double tend = cl_tend > 0 ? cl_tend : t0 + 40.0 / b.mode.e_omega * 0.5;
            opt.evolve.t_end = backward ? -tend : tend;
            opt.evolve.adapt = true;
            opt.mcfg.delta_E = cfg.get_double("modulation.delta_E", 0.1);
            opt.mcfg.gamma_tilde = cfg.get_double("modulation.gamma_tilde", 0.05);
            opt.one_pass_R = cfg.get_double("one_pass.R", 0.1);
            if (backward && evaluate(psi0, cl_omega).K > 0) opt.evolve.sponge.enabled = true;
            const ClassificationResult res = classify(psi0, b.gs, b.mode, b.dQ, *b.ops, opt);
            JsonWriter w;
            w.begin_object()
                .field("omega", cl_omega)
                .field("A", cl_A)
                .field("direction", cl_dir)
                .field("label", to_string(res.label))
                .field("K0", res.K0)
                .field("one_pass", to_string(res.one_pass))
                .field("fitted_rate", res.fitted_rate)
                .field("e_omega", b.mode.e_omega)
                .field("K_sign_flips", (long)res.K_sign_flips)
                .field("T_est", res.T_est)
                .end_object();
            const std::string path = cl_out.empty() ? join_path(outdir, "classify.json") : cl_out;
            write_text_file(path, w.str() + "\n");
            std::printf("label %s (K0 %s, one_pass %s)\n", to_string(res.label),
                        fmt9(res.K0).c_str(), to_string(res.one_pass));
            return 0;
        }
        if (chc->parsed()) {
            const std::vector<CheckRow> rows = run_check_suite(ch_omega, ch_fast, cfg);
            int failed = 0;
            for (const auto& r : rows) {
                std::printf("%-32s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                            r.detail.c_str());
                if (!r.pass) ++failed;
            }
            if (failed) {
                std::printf("%d check(s) failed\n", failed);
                return 1;
            }
            std::printf("all %zu checks passed\n", rows.size());
            return 0;
        }
        std::fputs(app.help().c_str(), stdout);
        return 0;
    } catch (const ConfigError& e) {
        print_error_json("config", e.what());
        return 2;
    } catch (const UsageError& e) {
        print_error_json("usage", e.what());
        return 2;
    } catch (const InputError& e) {
        print_error_json("input", e.what());
        return 2;
    } catch (const MissingArtifactError& e) {
        print_error_json("missing_artifact", e.what());
        return 3;
    } catch (const NumericError& e) {
        print_error_json("numeric", e.what());
        return 4;
    } catch (const std::exception& e) {
        print_error_json("internal", e.what());
        return 4;
    }
}

} // namespace cqnls
