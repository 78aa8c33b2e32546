#pragma once

#include <vector>

#include "cqnls/linearized.hpp"

// Symplectic decomposition of a state near the ground-state orbit:
//   psi = e^{i theta} (Q + eta),
//   eta = lam_+ Ypl + lam_- Ymn + b dQ + gamma,
// with theta fixed by Omega(e^{-i theta} psi, dQ) = 0 and the sign condition
// (e^{-i theta} psi, dQ)_real < 0, so the dQ-symplectic coefficient vanishes
// identically.  gamma is Omega-orthogonal to Ypl, Ymn, iQ and dQ.
//
// The linearized energy norm uses the full residual G = b dQ + gamma:
//   ||eta||_E^2 = e/2 (lam_+^2 + lam_-^2) + 1/2 <L G, G>,
// and the distance function is
//   d^2 = ||eta||_E^2 + chi(||eta||_E / (2 delta_E)) C,
//   C   = E(psi) - E(Q) + e/2 (lam_+ + lam_-)^2 - ||eta||_E^2.

namespace cqnls {

struct ModulationConfig {
    double delta_E = 0.1;      // cutoff scale of the distance function
    double gamma_tilde = 0.05; // switching radius of the modified distance
    double mass_tol = 1e-8;    // relative mass-matching gate
};

struct ModulationState {
    double t = 0;
    double theta = 0;
    double lambda_plus = 0, lambda_minus = 0;
    double lambda1 = 0, lambda2 = 0;
    double b = 0;
    RadialField Gamma; // the part orthogonal to all four directions (gamma)
    RadialField eta;
    double quad_form = 0;   // <L (b dQ + Gamma), (b dQ + Gamma)>
    double energy_norm = 0; // ||eta||_E
    double d_omega = 0;
    double C_omega = 0;
    double mass_psi = 0, energy_psi = 0;
};

// Im integral f conj(g)
double symplectic_form(const RadialField& f, const RadialField& g);

// C^2 cutoff: 1 on [0,1], 0 on [2,inf), quintic smoothstep between
double chi_cutoff(double x);

// gauge phase: theta with Omega(e^{-i theta} psi, dQ) = 0 and
// (e^{-i theta} psi, dQ)_real < 0
double fix_gauge(const RadialField& psi, const RadialField& dQ);

ModulationState decompose(const RadialField& psi, const GroundState& gs,
                          const InternalMode& mode, const RadialField& dQ,
                          const LinearizedOperators& ops,
                          const ModulationConfig& cfg = {}, double t = 0.0);

// |C_omega| / ||eta||_E^2  (0 when eta vanishes)
double energy_norm_expansion_check(const ModulationState& st);

// reconstruct e^{i theta}(Q + lam_+ Ypl + lam_- Ymn + b dQ + Gamma)
RadialField reconstruct(const ModulationState& st, const GroundState& gs,
                        const InternalMode& mode, const RadialField& dQ);

// modified distance: d_omega where it is valid and small, a rescaled
// H1 orbit distance outside; the scale factor is the median ratio
// d_omega/dist over the samples with d_omega <= gamma_tilde
std::vector<double> modified_distance(const std::vector<double>& d_omega,
                                      const std::vector<double>& dist_orbit,
                                      double gamma_tilde);

enum class OnePassVerdict { Stayed, Exited, ReturnViolation };

OnePassVerdict one_pass_monitor(const std::vector<double>& dtilde, double R);

const char* to_string(OnePassVerdict v);

} // namespace cqnls
