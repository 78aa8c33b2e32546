#pragma once

// Test-side oracles, independent of the library's solver paths:
//  - a fixed-step RK4 shooting integrator with Simpson quadrature for the
//    radial profile equation (used to cross-validate the production solver)
//  - closed-form Gaussian norm constants
//  - a brute-force phase-scan orbit distance
//  - simple finite-difference helpers

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "cqnls/grid.hpp"

namespace oracle {

// closed forms for u = exp(-r^2/2) with the 4 pi r^2 dr measure
inline const double pi = std::numbers::pi;
inline const double gauss_l2_sq = std::pow(pi, 1.5);
inline const double gauss_grad_sq = 1.5 * std::pow(pi, 1.5);
inline const double gauss_l4_4 = std::pow(pi / 2.0, 1.5);
inline const double gauss_l6_6 = std::pow(pi / 3.0, 1.5);

struct ShootingResult {
    double q0 = 0;       // profile value at the origin
    double l2_sq = 0;    // ||Q||_2^2 with the 4 pi r^2 measure
    double mass = 0;     // l2_sq / 2
    double grad_sq = 0;
    double l4_4 = 0;
    double l6_6 = 0;
};

// fixed-step classical RK4 + bisection shooting for
//   Q'' + (2/r) Q' = omega Q - Q^3 [- Q^5]
// followed by composite Simpson quadrature of the norms; h is the base step
// and the returned values are Richardson-combined from h and h/2 runs.
ShootingResult shoot_ground_state(double omega, bool quintic, double h = 2e-4);

// brute-force minimizer of ||u - e^{i theta} Q||_H1 over a theta grid
double dist_to_orbit_scan(const cqnls::RadialField& u, const cqnls::RadialField& Q,
                          std::size_t n_theta = 10000);

// central second difference of a scalar time series
double second_difference(const std::vector<double>& y, std::size_t i, double dt);

// least-squares slope of y vs x
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace oracle
