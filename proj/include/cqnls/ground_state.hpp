#pragma once

#include <optional>
#include <vector>

#include "cqnls/functionals.hpp"
#include "cqnls/grid.hpp"

// Radial positive ground states of
//   -Lap Q + omega Q - Q^3 - Q^5 = 0        (cubic-quintic mode)
//   -Lap Q + omega Q - Q^3       = 0        (cubic-only validation mode)
// computed by shooting on Q'' + (2/r) Q' = omega Q - Q^3 - Q^5 with
// bisection on Q(0) between the undershoot (profile turns back up) and
// overshoot (profile crosses zero) behaviors, followed by a Newton polish of
// the sampled profile on the grid so the discrete action gradient vanishes
// to machine precision.
//
// The shooting phase runs in long double and carries the norm integrals as
// extra ODE components, so the functional values attached to a GroundState
// are accurate to ~1e-12 relative independently of the grid spacing.  The
// grid field is what all operator identities (and the evolution module) see;
// the two agree to the O(h^2) accuracy of the discretization.

namespace cqnls {

enum class Nonlinearity { cubic_quintic, cubic_only };

struct GroundStateConfig {
    double omega_min = 0.01; // validated cubic-quintic branch range
    double omega_max = 0.25;
    double q0_min = 1e-3;
    double q0_max = 60.0;
    int max_bisections = 200;
    long double ode_rtol = 1e-14L;
    double newton_tol = 1e-13; // on the grid residual, relative
    int newton_max_iter = 50;
};

struct GroundState {
    double omega = 0;
    Nonlinearity mode = Nonlinearity::cubic_quintic;
    RadialField Q;          // grid profile, real, Newton-polished
    double q0 = 0;          // shooting value Q(0)
    double residual = 0;    // relative H^{-1} residual of the grid equation
    FunctionalValues values; // ODE-grade functionals of the profile
    FunctionalValues grid_values; // same functionals from the grid field
};

GroundState solve_ground_state(double omega, GridPtr grid,
                               Nonlinearity mode = Nonlinearity::cubic_quintic,
                               const GroundStateConfig& cfg = {},
                               std::optional<double> q0_hint = std::nullopt);

struct GroundStateBranch {
    std::vector<double> omegas;
    std::vector<GroundState> states;
    std::vector<double> mass_curve;      // M(Q_omega), ODE-grade
    std::vector<double> mass_slope;      // central dM/domega at interior omegas
    std::vector<std::size_t> slope_index; // omega index per slope entry
};

GroundStateBranch continue_branch(const std::vector<double>& omegas, GridPtr grid,
                                  const GroundStateConfig& cfg = {});

// d/domega Q_omega by central differences with Richardson-checked step;
// the two extra solves reuse the same grid.
RadialField domega_Q(const GroundState& gs, GridPtr grid,
                     const GroundStateConfig& cfg = {}, double delta = 0.0);

// Newton polish of an initial profile to the discrete elliptic equation;
// exposed for reuse (fixture loading, tests).
void newton_polish(std::vector<double>& q, const RadialGrid& grid, double omega,
                   Nonlinearity mode, double tol, int max_iter);

} // namespace cqnls
