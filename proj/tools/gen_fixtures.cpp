// Regenerates the golden-value fixtures under tests/fixtures/ from the
// independent shooting oracle (fixed-step RK4 + Simpson + Richardson).
// The production solver never touches these numbers; tests compare against
// them.

#include <cstdio>
#include <string>

#include "cqnls/io.hpp"
#include "oracles.hpp"

using namespace cqnls;

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "tests/fixtures";

    {
        const oracle::ShootingResult r = oracle::shoot_ground_state(1.0, false);
        JsonWriter w;
        w.begin_object()
            .field("omega", 1.0)
            .field("q0", r.q0)
            .field("l2_sq", r.l2_sq)
            .field("mass", r.mass)
            .field("grad_sq", r.grad_sq)
            .field("l4_4", r.l4_4)
            .end_object();
        write_text_file(join_path(dir, "cubic_oracle.json"), w.str() + "\n");
        std::printf("cubic-only omega=1: q0 = %.12g, |Q|_2^2 = %.12g\n", r.q0, r.l2_sq);
    }

    JsonWriter all;
    all.begin_array();
    for (double omega : {0.05, 0.1, 0.2}) {
        const oracle::ShootingResult r = oracle::shoot_ground_state(omega, true);
        all.begin_object()
            .field("omega", omega)
            .field("q0", r.q0)
            .field("mass", r.mass)
            .field("l2_sq", r.l2_sq)
            .field("grad_sq", r.grad_sq)
            .field("l4_4", r.l4_4)
            .field("l6_6", r.l6_6)
            .end_object();
        std::printf("cubic-quintic omega=%.3g: q0 = %.12g, mass = %.12g\n", omega,
                    r.q0, r.mass);
    }
    all.end_array();
    write_text_file(join_path(dir, "groundstate_oracle.json"), all.str() + "\n");
    return 0;
}
