#include "cqnls/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cqnls {

double symplectic_form(const RadialField& f, const RadialField& g) {
    return l2_pairing(f, g).imag();
}

double chi_cutoff(double x) {
    if (x <= 1.0) return 1.0;
    if (x >= 2.0) return 0.0;
    const double t = x - 1.0;
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

double fix_gauge(const RadialField& psi, const RadialField& dQ) {
    const cplx z = l2_pairing(psi, dQ);
    const double scale =
        std::sqrt(l2_norm_sq(psi)) * std::sqrt(l2_norm_sq(dQ));
    if (std::abs(z) <= 1e-14 * scale)
        throw GaugeDegenerateError("state nearly orthogonal to d/domega Q");
    // theta = arg z + pi makes (e^{-i theta} psi, dQ)_real = -|z| < 0 and
    // kills the symplectic pairing
    double theta = std::arg(z) + std::numbers::pi;
    if (theta > std::numbers::pi) theta -= 2.0 * std::numbers::pi;
    return theta;
}

ModulationState decompose(const RadialField& psi, const GroundState& gs,
                          const InternalMode& mode, const RadialField& dQ,
                          const LinearizedOperators& ops,
                          const ModulationConfig& cfg, double t) {
    const FunctionalValues fv_psi = evaluate(psi, gs.omega);
    const FunctionalValues fv_q = evaluate(gs.Q, gs.omega);
    if (std::abs(fv_psi.mass - fv_q.mass) > cfg.mass_tol * fv_q.mass)
        throw UsageError("decompose: mass not matched to the ground state; "
                         "apply threshold_projection first");

    ModulationState st;
    st.t = t;
    st.mass_psi = fv_psi.mass;
    st.energy_psi = fv_psi.energy;
    st.theta = fix_gauge(psi, dQ);

    const cplx rot = std::polar(1.0, -st.theta);
    st.eta = psi;
    for (std::size_t i = 0; i < psi.size(); ++i)
        st.eta[i] = rot * psi[i] - gs.Q[i];

    const RadialField Yp = mode.Yplus();
    const RadialField Ym = mode.Yminus();
    st.lambda_plus = symplectic_form(st.eta, Ym);
    st.lambda_minus = -symplectic_form(st.eta, Yp);
    st.lambda1 = 0.5 * (st.lambda_plus + st.lambda_minus);
    st.lambda2 = 0.5 * (st.lambda_plus - st.lambda_minus);

    RadialField iQ = gs.Q;
    for (std::size_t i = 0; i < iQ.size(); ++i) iQ[i] = cplx(0, 1) * gs.Q[i];
    const double qdq = l2_pairing(gs.Q, dQ).real();
    st.b = -symplectic_form(st.eta, iQ) / qdq;

    st.Gamma = st.eta;
    for (std::size_t i = 0; i < st.Gamma.size(); ++i)
        st.Gamma[i] = st.eta[i] - st.lambda_plus * Yp[i] -
                      st.lambda_minus * Ym[i] - st.b * dQ[i];

    RadialField Gfull = st.Gamma;
    for (std::size_t i = 0; i < Gfull.size(); ++i) Gfull[i] += st.b * dQ[i];
    st.quad_form = ops.quadratic_form(Gfull);

    const double e = mode.e_omega;
    const double en2 = 0.5 * e * (st.lambda_plus * st.lambda_plus +
                                  st.lambda_minus * st.lambda_minus) +
                       0.5 * st.quad_form;
    st.energy_norm = std::sqrt(std::max(0.0, en2));
    const double sum = st.lambda_plus + st.lambda_minus;
    st.C_omega = fv_psi.energy - fv_q.energy + 0.5 * e * sum * sum - en2;
    const double d2 =
        en2 + chi_cutoff(st.energy_norm / (2.0 * cfg.delta_E)) * st.C_omega;
    st.d_omega = std::sqrt(std::max(0.0, d2));
    return st;
}

double energy_norm_expansion_check(const ModulationState& st) {
    const double en2 = st.energy_norm * st.energy_norm;
    if (en2 < 1e-300) return 0.0;
    return std::abs(st.C_omega) / en2;
}

RadialField reconstruct(const ModulationState& st, const GroundState& gs,
                        const InternalMode& mode, const RadialField& dQ) {
    const RadialField Yp = mode.Yplus();
    const RadialField Ym = mode.Yminus();
    RadialField out(gs.Q.grid());
    const cplx rot = std::polar(1.0, st.theta);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = rot * (gs.Q[i] + st.lambda_plus * Yp[i] + st.lambda_minus * Ym[i] +
                        st.b * dQ[i] + st.Gamma[i]);
    return out;
}

std::vector<double> modified_distance(const std::vector<double>& d_omega,
                                      const std::vector<double>& dist_orbit,
                                      double gamma_tilde) {
    if (d_omega.size() != dist_orbit.size())
        throw UsageError("modified_distance: series length mismatch");
    std::vector<double> ratios;
    for (std::size_t i = 0; i < d_omega.size(); ++i) {
        const double d = d_omega[i];
        if (std::isfinite(d) && d <= gamma_tilde && dist_orbit[i] > 1e-300)
            ratios.push_back(d / dist_orbit[i]);
    }
    double factor = 1.0;
    if (!ratios.empty()) {
        std::sort(ratios.begin(), ratios.end());
        factor = ratios[ratios.size() / 2];
    }
    std::vector<double> out(d_omega.size());
    for (std::size_t i = 0; i < d_omega.size(); ++i) {
        const double d = d_omega[i];
        if (std::isfinite(d) && d <= gamma_tilde)
            out[i] = d;
        else
            out[i] = factor * dist_orbit[i];
    }
    return out;
}

OnePassVerdict one_pass_monitor(const std::vector<double>& dtilde, double R) {
    if (dtilde.empty()) throw InputError("one_pass_monitor: empty series");
    const double exit_level = R + std::pow(R, 1.5);
    bool exited = false;
    bool returned = false;
    for (double d : dtilde) {
        if (!exited) {
            if (d >= exit_level) exited = true;
        } else if (d < R) {
            returned = true;
            break;
        }
    }
    if (!exited) return OnePassVerdict::Stayed;
    return returned ? OnePassVerdict::ReturnViolation : OnePassVerdict::Exited;
}

const char* to_string(OnePassVerdict v) {
    switch (v) {
        case OnePassVerdict::Stayed: return "Stayed";
        case OnePassVerdict::Exited: return "Exited";
        default: return "ReturnViolation";
    }
}

} // namespace cqnls
