// Throughput comparison of the serial reference integrator kernel against
// the OpenMP kernel, and of the DSMC pass.

#include <chrono>
#include <cstdio>

#include "qsim/collisions.hpp"
#include "qsim/dynamics.hpp"
#include "qsim/sampler.hpp"

using namespace qsim;

namespace {

double run_case(bool parallel, bool with_collisions, std::size_t n_atoms, double duration) {
    TrapSpec trap;
    trap.depth_u0 = u0_from_radial_frequency(1.25e3, trap.beam.waist, trap.consts.atom_mass);

    SampleSpec sspec;
    sspec.n_atoms = n_atoms;
    sspec.temperature = 65e-6;
    sspec.seed = 42;
    Ensemble ens = sample_thermal(trap, sspec);

    ModulationSpec mod;
    mod.depth_h = 0.15;
    mod.freq_f = 2.5e3;
    mod.duration_t = duration;

    IntegrationSpec ispec;
    ispec.parallel = parallel;
    CollisionSpec cspec;
    cspec.enabled = with_collisions;
    cspec.macro_weight = 500.0;

    const auto t0 = std::chrono::steady_clock::now();
    evolve(ens, trap, mod, ispec, &cspec);
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    const double steps = duration / default_timestep(trap, mod);
    return double(n_atoms) * steps / secs;
}

} // namespace

int main() {
    const std::size_t n = 20000;
    const double duration = 20e-3;
    std::printf("%-28s %15s\n", "kernel", "atom-steps/s");
    std::printf("%-28s %15.3e\n", "serial reference", run_case(false, false, n, duration));
    std::printf("%-28s %15.3e\n", "openmp", run_case(true, false, n, duration));
    std::printf("%-28s %15.3e\n", "serial + dsmc", run_case(false, true, n, duration));
    std::printf("%-28s %15.3e\n", "openmp + dsmc", run_case(true, true, n, duration));
    return 0;
}
