#pragma once

#include <string>
#include <vector>

#include "cqnls/evolution.hpp"

// Exponential-series approximate solutions along the stable direction of the
// linearization, the special threshold initial data built from them, decay
// rate fits, projection onto the threshold mass/energy surface, and the
// empirical trichotomy harness.
//
// With X = e^{-e t}, the profile V(t) = sum_{j=1..k} X^j Z_j satisfies
//   dV/dt + i L V = N(V) + O(X^{k+1}),
// where Z_1 = A (Y1 - i Y2) and each Z_j solves the real-linear system
//   (i L - j e) Z_j = F_j,
// F_j being the X^j coefficient of the polynomial expansion of N(V).

namespace cqnls {

struct SeriesProfile {
    double A = 0;
    int k = 0;
    double e_omega = 0;
    std::vector<RadialField> Z; // Z[j-1] is the coefficient of X^j
    double residual_exponent = 0; // fitted decay exponent of the truncation error
    double residual_r2 = 0;       // fit quality

    RadialField at_time(double t) const;
};

SeriesProfile build_profile_series(double A, int k, const InternalMode& mode,
                                   const LinearizedOperators& ops);

// Q + V(t0); requires ||V(t0)||_H1 <= 0.1 ||Q||_H1
RadialField make_special_initial_data(const SeriesProfile& series, double t0,
                                      const GroundState& gs);

struct RateFit {
    double rate = 0; // decay exponent (positive = decaying)
    double r2 = 0;
    std::size_t samples = 0;
};

// least-squares slope of log(dist) over the window [t0, t1]; values below
// 10x the noise floor are excluded
RateFit fit_decay_rate(const std::vector<double>& times,
                       const std::vector<double>& dist, double t0, double t1,
                       double noise_floor = 1e-11);

// two-parameter Newton on amplitude/scale a*T_lam(u) matching the discrete
// mass and energy of the grid ground state to 1e-10 relative
RadialField threshold_projection(const RadialField& u, const GroundState& gs);

enum class Label { Blowup, Scatter, Trapped, Undecided };
const char* to_string(Label l);

struct ClassifyOptions {
    EvolveConfig evolve;
    ModulationConfig mcfg;
    double one_pass_R = 0.1;
    double noise_floor = 1e-9; // trapped detection floor on d
};

struct ClassificationResult {
    Label label = Label::Undecided;
    double K0 = 0;                 // K of the initial data
    int K_sign_flips = 0;          // sign changes of K along the run
    OnePassVerdict one_pass = OnePassVerdict::Stayed;
    double fitted_rate = std::nan("");
    double d_final = std::nan("");
    double d_max = std::nan("");
    Verdict evolve_verdict = Verdict::Undecided;
    double T_est = std::nan("");
    TrajectoryRecord trajectory;
};

ClassificationResult classify(const RadialField& psi0, const GroundState& gs,
                              const InternalMode& mode, const RadialField& dQ,
                              const LinearizedOperators& ops,
                              const ClassifyOptions& opt);

} // namespace cqnls
