#include "oracles.hpp"

#include <stdexcept>

#include "cqnls/functionals.hpp"

namespace oracle {

namespace {

struct State {
    double Q, P;
};

State rk4_step(const State& s, double r, double h, double omega, bool quintic) {
    auto f = [&](double rr, const State& y) {
        double nl = y.Q * y.Q * y.Q;
        if (quintic) nl += y.Q * y.Q * y.Q * y.Q * y.Q;
        return State{y.P, -2.0 / rr * y.P + omega * y.Q - nl};
    };
    const State k1 = f(r, s);
    const State k2 = f(r + h / 2, {s.Q + h / 2 * k1.Q, s.P + h / 2 * k1.P});
    const State k3 = f(r + h / 2, {s.Q + h / 2 * k2.Q, s.P + h / 2 * k2.P});
    const State k4 = f(r + h, {s.Q + h * k3.Q, s.P + h * k3.P});
    return {s.Q + h / 6 * (k1.Q + 2 * k2.Q + 2 * k3.Q + k4.Q),
            s.P + h / 6 * (k1.P + 2 * k2.P + 2 * k3.P + k4.P)};
}

// -1 = falls back up (q0 too small), +1 = crosses zero (q0 too large)
int classify_q0(double q0, double omega, bool quintic, double h, double r_stop) {
    const double r0 = 1e-4;
    double f0 = omega * q0 - q0 * q0 * q0;
    if (quintic) f0 -= std::pow(q0, 5);
    State s{q0 + f0 * r0 * r0 / 6.0, f0 * r0 / 3.0};
    bool falling = f0 < 0;
    for (double r = r0; r < r_stop; r += h) {
        s = rk4_step(s, r, h, omega, quintic);
        if (s.Q <= 0) return +1;
        if (!falling && s.P < 0) falling = true;
        if ((falling && s.P > 0 && s.Q < 0.9 * q0) || s.Q > 1.5 * q0) return -1;
    }
    return -1;
}

ShootingResult run_at_step(double omega, bool quintic, double h) {
    const double r_stop = 40.0 / std::sqrt(omega);
    double lo = 0.05, hi = 0.05;
    while (classify_q0(hi, omega, quintic, h, r_stop) < 0) {
        lo = hi;
        hi *= 1.5;
        if (hi > 1e3) throw std::runtime_error("oracle: no crossing found");
    }
    for (int i = 0; i < 90; ++i) {
        const double mid = 0.5 * (lo + hi);
        (classify_q0(mid, omega, quintic, h, r_stop) > 0 ? hi : lo) = mid;
    }
    const double q0 = 0.5 * (lo + hi);

    // integrate the converged profile and accumulate Simpson sums of
    // r^2 Q^2, r^2 P^2, r^2 Q^4, r^2 Q^6; stop once the profile is tiny
    const double r0 = 1e-4;
    double f0 = omega * q0 - q0 * q0 * q0;
    if (quintic) f0 -= std::pow(q0, 5);
    State s{q0 + f0 * r0 * r0 / 6.0, f0 * r0 / 3.0};
    std::vector<double> g2, gg, g4, g6;
    g2.push_back(r0 * r0 * s.Q * s.Q);
    gg.push_back(r0 * r0 * s.P * s.P);
    g4.push_back(r0 * r0 * std::pow(s.Q, 4));
    g6.push_back(r0 * r0 * std::pow(s.Q, 6));
    double r = r0;
    while (r < r_stop) {
        s = rk4_step(s, r, h, omega, quintic);
        r += h;
        if (s.Q <= 0 || (s.Q < 1e-9 * q0 && s.P < 0)) break;
        g2.push_back(r * r * s.Q * s.Q);
        gg.push_back(r * r * s.P * s.P);
        g4.push_back(r * r * std::pow(s.Q, 4));
        g6.push_back(r * r * std::pow(s.Q, 6));
    }
    auto simpson = [&](const std::vector<double>& g) {
        double acc = 0;
        std::size_t m = g.size() - 1;
        if (m % 2 == 1) m -= 1; // even interval count for plain Simpson
        for (std::size_t i = 0; i + 2 <= m; i += 2)
            acc += h / 3.0 * (g[i] + 4.0 * g[i + 1] + g[i + 2]);
        return 4.0 * pi * acc;
    };
    ShootingResult out;
    out.q0 = q0;
    out.l2_sq = simpson(g2);
    out.grad_sq = simpson(gg);
    out.l4_4 = simpson(g4);
    out.l6_6 = simpson(g6);
    out.mass = 0.5 * out.l2_sq;
    return out;
}

} // namespace

ShootingResult shoot_ground_state(double omega, bool quintic, double h) {
    const ShootingResult a = run_at_step(omega, quintic, h);
    const ShootingResult b = run_at_step(omega, quintic, h / 2);
    // Richardson on the 4th-order integrator (quadrature error is higher order)
    ShootingResult out;
    out.q0 = (16.0 * b.q0 - a.q0) / 15.0;
    out.l2_sq = (16.0 * b.l2_sq - a.l2_sq) / 15.0;
    out.grad_sq = (16.0 * b.grad_sq - a.grad_sq) / 15.0;
    out.l4_4 = (16.0 * b.l4_4 - a.l4_4) / 15.0;
    out.l6_6 = (16.0 * b.l6_6 - a.l6_6) / 15.0;
    out.mass = 0.5 * out.l2_sq;
    return out;
}

double dist_to_orbit_scan(const cqnls::RadialField& u, const cqnls::RadialField& Q,
                          std::size_t n_theta) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_theta; ++k) {
        const double th = 2.0 * pi * (double)k / (double)n_theta;
        cqnls::RadialField Qr = Q;
        Qr *= std::polar(1.0, th);
        best = std::min(best, cqnls::h1_distance(u, Qr));
    }
    return best;
}

double second_difference(const std::vector<double>& y, std::size_t i, double dt) {
    return (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (dt * dt);
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = (double)x.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace oracle
