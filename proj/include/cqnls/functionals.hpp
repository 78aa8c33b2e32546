#pragma once

#include "cqnls/grid.hpp"

// Variational quantities of the cubic-quintic problem:
//   M(u) = 1/2 ||u||_2^2
//   E(u) = 1/2 ||grad u||_2^2 - 1/4 ||u||_4^4 - 1/6 ||u||_6^6
//   K(u) = ||grad u||_2^2 - 3/4 ||u||_4^4 - ||u||_6^6
//   S_w(u) = E(u) + w M(u)
//   J_w(u) = S_w(u) - K(u)/2 = w/2 ||u||_2^2 + 1/8 ||u||_4^4 + 1/3 ||u||_6^6
// together with the mass-preserving scaling T_lam u = lam^{3/2} u(lam r).

namespace cqnls {

struct FunctionalValues {
    double mass = 0;
    double energy = 0;
    double K = 0;
    double action = 0; // S_omega
    double J = 0;      // J_omega
    double omega = 0;
    NormReport norms;
};

FunctionalValues evaluate(const RadialField& u, double omega);
FunctionalValues functional_values_from_norms(const NormReport& n, double omega);

// T_lam u resampled onto u's grid (cubic interpolation, zero beyond r_max)
RadialField scale(const RadialField& u, double lambda);

// K as a function of lambda along the scaling ray, using the scaling laws
// on the base norms (no resampling error):
//   K(T_lam u) = lam^2 g - (3/4) lam^3 ||u||_4^4 - lam^6 ||u||_6^6
double K_of_scaling(const NormReport& base, double lambda);

// the unique zero of lam -> K(T_lam u) on (0, inf)
double lambda_star(const RadialField& u);

// action gradient  -Lap u + w u - |u|^2 u - |u|^4 u
RadialField action_gradient(const RadialField& u, double omega);

// H^{-1}-type norm of a residual field: sqrt(<(-Lap+1)^{-1} r, r>)
double h_minus1_norm(const RadialField& r);

// distance to the phase orbit of a real profile Q:
//   inf_theta ||u - e^{i theta} Q||_{H^1}, minimized in closed form
double dist_to_orbit(const RadialField& u, const RadialField& Q);

} // namespace cqnls
