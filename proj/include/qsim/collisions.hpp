#pragma once

// DSMC hard-sphere elastic collisions (no-time-counter scheme) that keep the
// cloud near local thermal equilibrium during modulation. Cross section
// sigma = 8 pi a^2.

#include <cstdint>

#include "qsim/ensemble.hpp"
#include "qsim/trap.hpp"

namespace qsim {

struct CollisionSpec {
    bool enabled = false;
    double scattering_length = 5.29e-9; // m, 87Rb triplet
    double cell_size_radial = 0.0;      // m; 0 = auto (w0/4)
    double cell_size_axial = 0.0;       // m; 0 = auto (z_R/10)
    double macro_weight = 1.0;          // physical atoms per simulation particle
    uint64_t seed = 0;

    void validate() const {
        if (scattering_length <= 0.0)
            throw std::invalid_argument("scattering_length must be > 0");
        if (cell_size_radial < 0.0 || cell_size_axial < 0.0)
            throw std::invalid_argument("cell sizes must be >= 0 (0 = auto)");
        if (macro_weight < 1.0) throw std::invalid_argument("macro_weight must be >= 1");
    }
};

// One DSMC pass over the cells for a dynamics step of length dt.
// Per-cell RNG streams are derived from (seed, cell index, step index), so
// the result is deterministic under any processing schedule.
void collide(Ensemble& ens, const CollisionSpec& cspec, const TrapSpec& trap, double dt);

// Gamma = n_peak_phys * sigma * <v_rel>, with <v_rel> = sqrt(16 k T / (pi m)).
double collision_rate_estimate(const Ensemble& ens, const CollisionSpec& cspec,
                               const TrapSpec& trap);

// Same formula from given density/temperature, for diagnostics and tests.
double collision_rate_from_conditions(double density, double scattering_length,
                                      double temperature, const PhysConsts& consts);

} // namespace qsim
