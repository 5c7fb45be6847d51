#pragma once

// Velocity-Verlet propagation under the modulated trap, trap-loss criterion,
// and per-run diagnostics. The per-atom update exists in two variants: an
// OpenMP kernel used for production and a serial reference kept for testing;
// both are bitwise identical per atom.

#include <vector>

#include "qsim/ensemble.hpp"
#include "qsim/trap.hpp"

namespace qsim {

struct CollisionSpec;

struct IntegrationSpec {
    double dt = 0.0;                 // s; 0 = auto via default_timestep
    double loss_radius_factor = 4.0; // atom must be outside this many w(z)/z_R to be lost
    std::size_t diag_interval = 200; // steps between diagnostics rows
    bool parallel = true;            // OpenMP kernel vs serial reference

    void validate(double f_radial, double mod_freq) const {
        if (dt <= 0.0) throw std::invalid_argument("dt must be > 0");
        const double fmax = std::max(f_radial, mod_freq);
        if (fmax > 0.0 && dt > 1.0 / (50.0 * fmax))
            throw std::invalid_argument("dt must be <= 1/(50 max(f_radial, f_mod))");
        if (loss_radius_factor < 2.0)
            throw std::invalid_argument("loss_radius_factor must be >= 2");
    }
};

struct DiagnosticsSeries {
    std::vector<double> times;       // s
    std::vector<std::size_t> n_alive;
    std::vector<double> mean_energy; // J, alive atoms
    std::vector<double> temperature; // K, alive atoms
};

// dt = 1/(64 max(f_r, f)), rounded so one modulation period is an integer
// number of steps.
double default_timestep(const TrapSpec& trap, const ModulationSpec& mod);

// One velocity-Verlet step (force at t and t+dt); alive flags untouched.
// Throws on non-finite state, naming atom index and time.
void step(Ensemble& ens, const TrapSpec& trap, const ModulationSpec& mod, double dt,
          bool parallel = true);

// Mark atoms dead iff total_energy > 0 AND spatially outside
// loss_radius_factor * (w(z) radially, z_R axially). Dead atoms stay dead.
void apply_loss(Ensemble& ens, const TrapSpec& trap, const ModulationSpec& mod,
                double loss_radius_factor);

// step + apply_loss (+ optional DSMC pass) for mod.duration_t, diagnostics
// every diag_interval steps.
DiagnosticsSeries evolve(Ensemble& ens, const TrapSpec& trap, const ModulationSpec& mod,
                         const IntegrationSpec& ispec,
                         const CollisionSpec* collisions = nullptr);

} // namespace qsim
