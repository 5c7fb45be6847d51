#pragma once

// Thermal initial conditions: Metropolis sampling of exp(-E/kT) in the full
// anharmonic trap, truncated to bound states (E_total < 0).

#include <cstdint>

#include "qsim/ensemble.hpp"
#include "qsim/trap.hpp"

namespace qsim {

struct SampleSpec {
    std::size_t n_atoms = 10000;
    double temperature = 65e-6; // K
    uint64_t seed = 1;
    std::size_t burn_in = 10000;
    std::size_t thinning = 10;
    double proposal_scale_pos = 0.0; // m;   0 = auto (0.3 sigma_rho)
    double proposal_scale_vel = 0.0; // m/s; 0 = auto (0.3 sigma_v)

    void validate() const {
        if (n_atoms < 1) throw std::invalid_argument("n_atoms must be >= 1");
        if (temperature <= 0.0) throw std::invalid_argument("temperature must be > 0");
        if (thinning < 1) throw std::invalid_argument("thinning must be >= 1");
    }
};

// Draw a bound thermal ensemble; deterministic given (trap, spec).
// Throws if the post-burn-in acceptance rate leaves (5%, 95%).
Ensemble sample_thermal(const TrapSpec& trap, const SampleSpec& spec);

// k_B T = (2/3) * mean kinetic energy of alive atoms. Needs >= 2 alive.
double measure_temperature(const Ensemble& ens, const PhysConsts& consts);

// Harmonic-approximation peak density of simulation particles:
// n0 = N w_r^2 w_z (m / (2 pi k_B T))^{3/2}.
double peak_density(const Ensemble& ens, const TrapSpec& trap);

} // namespace qsim
