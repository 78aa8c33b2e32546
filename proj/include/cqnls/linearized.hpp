#pragma once

#include <vector>

#include "cqnls/ground_state.hpp"
#include "cqnls/grid.hpp"
#include "cqnls/kernels.hpp"

// Linearization around the ground state.  With eta = eta1 + i eta2,
//   L_plus  = -Lap + omega - 3 Q^2 - 5 Q^4   (acts on the real part)
//   L_minus = -Lap + omega -   Q^2 -   Q^4   (acts on the imaginary part)
// The internal mode is the pair (Y1, Y2) with
//   L_plus Y1 = -e Y2,   L_minus Y2 = e Y1,   e > 0,
// normalized so 2 (Y1, Y2)_{L2} = 1 and signed so (Q, Y2)_{L2} < 0.
// Y1 solves the composed problem L_minus L_plus Y1 = -e^2 Y1, which is what
// the shifted inverse iteration targets; the near-kernel direction
// L_plus^{-1} Q is deflated explicitly.

namespace cqnls {

enum class LSign { plus, minus };

class LinearizedOperators {
public:
    LinearizedOperators(const GroundState& gs);

    double omega() const { return omega_; }
    const GridPtr& grid() const { return grid_; }
    const RadialField& Q() const { return Q_; }
    const std::vector<double>& potential(LSign s) const {
        return s == LSign::plus ? pot_plus_ : pot_minus_;
    }

    // (-Lap + omega - pot) v
    RadialField apply(LSign s, const RadialField& v) const;

    // same operator acting on v-representation samples (w = r*u)
    void apply_v(LSign s, std::span<const double> v, std::span<double> out) const;

    // tridiagonal data of the v-representation matrix
    void matrix(LSign s, std::vector<double>& diag, double& off) const;

    // solve (op) x = b in the v representation
    std::vector<double> solve_v(LSign s, std::vector<double> b) const;

    // quadratic form <L_plus Re f, Re f> + <L_minus Im f, Im f>
    double quadratic_form(const RadialField& f) const;

private:
    double omega_;
    GridPtr grid_;
    RadialField Q_;
    std::vector<double> pot_plus_, pot_minus_;
};

struct InternalMode {
    double e_omega = 0;
    RadialField Y1, Y2;      // real fields
    double residual_plus = 0;  // rel. residual of L+ Y1 = -e Y2
    double residual_minus = 0; // rel. residual of L- Y2 =  e Y1
    double pairing = 0;        // (Y1, Y2)_{L2}, = 1/2 after normalization
    double signQ2 = 0;         // (Q, Y2)_{L2}, < 0 by convention
    RadialField Yplus() const; // Y1 + i Y2
    RadialField Yminus() const; // Y1 - i Y2
};

struct InternalModeConfig {
    double rq_tol = 1e-12;  // residual tolerance of the eigen iteration
    int max_iter = 200;
};

InternalMode solve_internal_mode(const LinearizedOperators& ops,
                                 const InternalModeConfig& cfg = {});

// full nonlinear remainder N(eta) = N1(eta) + N2(eta), including the i factor
RadialField nonlinear_remainder(const LinearizedOperators& ops, const RadialField& eta);

struct SpectralReport {
    double orth_Q_Y1 = 0;       // |(Q,Y1)| / (||Q|| ||Y1||)
    double orth_dQ_Y2 = 0;      // |(dQ,Y2)| / (||dQ|| ||Y2||), NaN if no dQ
    double pairing = 0;         // (Y1,Y2)
    double signQ2 = 0;          // (Q,Y2)
    double gap_lhs = 0;         // e/2 |(Q,Y2)|
    double gap_rhs = 0;         // 4 |(Q^5,Y1)|
    bool orth_Q_Y1_ok = false;
    bool orth_dQ_Y2_ok = false;
    bool pairing_positive = false;
    bool signQ2_negative = false;
    bool gap_ok = false;        // e/2 |(Q,Y2)| >= 4 |(Q^5,Y1)|
};

SpectralReport check_spectral_inequalities(const InternalMode& mode,
                                           const GroundState& gs,
                                           const RadialField* dQ = nullptr);

// pentadiagonal matrix of (L_minus L_plus + shift) in the v representation;
// shared by the eigensolver and the series construction
kernels::BandedLU composed_operator_banded(const LinearizedOperators& ops, double shift);

} // namespace cqnls
