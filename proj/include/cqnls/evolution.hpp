#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cqnls/modulation.hpp"

// Conservative time integration of
//   i psi_t + Lap psi + |psi|^2 psi + |psi|^4 psi = 0
// with the implicit midpoint rule in the v = r*psi variable.  Each step
// solves a complex tridiagonal system per fixed-point sweep; the last sweep
// is a Cayley transform for a frozen real potential, so the discrete mass
// is conserved to roundoff regardless of the sweep tolerance.  Negative
// time is reached through the conjugation symmetry psi(t,x) -> conj(psi)(-t,x).

namespace cqnls {

struct StepRejectError : NumericError {
    using NumericError::NumericError;
};

struct SpongeConfig {
    bool enabled = false;
    double strength = 1.0;
    double width_frac = 0.1; // absorbing layer fraction of r_max
};

struct EvolveConfig {
    double dt0 = 1e-3;
    double t_end = 1.0;           // sign selects the time direction
    bool adapt = false;           // dt = min(dt0, adapt_c / grad_sq)
    double adapt_c = 0.0;         // 0: derived from the initial data
    double dt_floor = 1e-9;
    double grad_blowup_factor = 1e3;
    int blowup_consecutive = 3;
    SpongeConfig sponge;
    int record_every = 10;
    double fixed_point_tol = 1e-13;
    int fixed_point_max = 50;
    std::size_t max_steps = 100000000;
};

enum class Verdict { Completed, BlowupDetected, ScatterProxy, Undecided };
const char* to_string(Verdict v);

struct Diagnostics {
    double t = 0;
    double mass = 0, energy = 0, K = 0;
    double grad_sq = 0, l4_4 = 0, l6_6 = 0;
    double variance = 0, momentum = 0;
    double y_R = 0, y_R_prime = 0, A_R = 0;
    double d_omega = std::nan("");   // modulation distance when context given
    double dist_orbit = std::nan(""); // raw H1 orbit distance when context given
    double dt = 0;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<Diagnostics> rows;
    Verdict verdict = Verdict::Undecided;
    double T_est = std::nan(""); // blow-up estimate when detected
    RadialField final_state;
    std::string note;
};

struct ModulationContext {
    const GroundState* gs = nullptr;
    const InternalMode* mode = nullptr;
    const RadialField* dQ = nullptr;
    const LinearizedOperators* ops = nullptr;
    ModulationConfig mcfg;
};

// localized virial weight: phi(rho) = rho^2 on [0,1], quintic blend down to
// zero on [1, 1+L], with L chosen so phi >= 0 and phi'' <= 2 everywhere
class VirialWeight {
public:
    VirialWeight();
    double L() const { return L_; }
    double phi(double rho) const;
    double dphi(double rho) const;
    double d2phi(double rho) const;
    double lap(double rho) const;   // phi'' + 2 phi'/rho
    double bilap(double rho) const; // phi'''' + 4 phi'''/rho

private:
    double L_ = 0;
    double a3_ = 0, a4_ = 0, a5_ = 0;
    double H(double t) const;
    double H1(double t) const;
    double H2(double t) const;
    double H3(double t) const;
    double H4(double t) const;
};

// one implicit-midpoint step; throws StepRejectError if the fixed point
// does not converge (caller halves dt)
RadialField step(const RadialField& psi, double dt, double fixed_point_tol = 1e-13,
                 int fixed_point_max = 50);

TrajectoryRecord evolve(const RadialField& psi0, const EvolveConfig& cfg,
                        const ModulationContext* ctx = nullptr);

std::pair<double, double> conserved_drift(const TrajectoryRecord& traj);

struct VirialDiagnostics {
    double y_R = 0, y_R_prime = 0, A_R = 0;
};
VirialDiagnostics localized_virial(const RadialField& psi, double R);

bool detect_scatter(const TrajectoryRecord& traj, double exit_radius = 0.1);

// centered-difference radial derivative (one-sided at the ends)
std::vector<cplx> radial_derivative(const RadialField& u);

} // namespace cqnls
