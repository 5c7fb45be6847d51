#include "qsim/sampler.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "qsim/rng.hpp"

namespace qsim {

namespace {

struct Walker {
    Vec3 pos;
    Vec3 vel;
    double energy;
};

} // namespace

Ensemble sample_thermal(const TrapSpec& trap, const SampleSpec& spec) {
    trap.validate();
    spec.validate();

    const double kT = trap.consts.boltzmann_k * spec.temperature;
    if (kT >= trap.depth_u0)
        throw std::invalid_argument("sample_thermal: temperature must be below U0/k_B");

    const ModulationSpec no_mod{};
    const TrapFrequencies freqs = trap_frequencies(trap);
    const double omega_r = 2.0 * M_PI * freqs.f_radial;
    const double omega_z = 2.0 * M_PI * freqs.f_axial;
    const double sigma_v = std::sqrt(kT / trap.consts.atom_mass);
    const double sigma_rho = sigma_v / omega_r;

    const double step_pos = spec.proposal_scale_pos > 0.0 ? spec.proposal_scale_pos
                                                          : 0.3 * sigma_rho;
    const double step_vel = spec.proposal_scale_vel > 0.0 ? spec.proposal_scale_vel
                                                          : 0.3 * sigma_v;
    // axial confinement is much weaker; scale the z proposal accordingly
    const double step_z = step_pos * (omega_r / omega_z);

    std::mt19937_64 rng = make_engine(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Walker w;
    w.pos = {0.0, 0.0, 0.0};
    w.vel = {0.0, 0.0, 0.0};
    w.energy = total_energy(trap, w.pos, w.vel, 0.0, no_mod);

    std::size_t accepted = 0, trials = 0;
    auto advance = [&](bool count) {
        Walker cand;
        cand.pos = {w.pos[0] + step_pos * gauss(rng),
                    w.pos[1] + step_pos * gauss(rng),
                    w.pos[2] + step_z * gauss(rng)};
        cand.vel = {w.vel[0] + step_vel * gauss(rng),
                    w.vel[1] + step_vel * gauss(rng),
                    w.vel[2] + step_vel * gauss(rng)};
        cand.energy = total_energy(trap, cand.pos, cand.vel, 0.0, no_mod);
        if (count) ++trials;
        if (cand.energy >= 0.0) return; // only bound states
        const double logr = (w.energy - cand.energy) / kT;
        if (logr >= 0.0 || unif(rng) < std::exp(logr)) {
            w = cand;
            if (count) ++accepted;
        }
    };

    for (std::size_t i = 0; i < spec.burn_in; ++i) advance(false);

    Ensemble ens;
    ens.resize(spec.n_atoms);
    ens.seed = spec.seed;
    ens.time = 0.0;
    for (std::size_t i = 0; i < spec.n_atoms; ++i) {
        for (std::size_t k = 0; k < spec.thinning; ++k) advance(true);
        ens.x[i] = w.pos[0]; ens.y[i] = w.pos[1]; ens.z[i] = w.pos[2];
        ens.vx[i] = w.vel[0]; ens.vy[i] = w.vel[1]; ens.vz[i] = w.vel[2];
    }

    const double acc = trials > 0 ? double(accepted) / double(trials) : 0.0;
    if (acc < 0.05 || acc > 0.95)
        throw std::runtime_error("sample_thermal: acceptance rate " + std::to_string(acc) +
                                 " outside (0.05, 0.95); adjust proposal scales");
    return ens;
}

double measure_temperature(const Ensemble& ens, const PhysConsts& consts) {
    double sum_v2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (!ens.alive[i]) continue;
        sum_v2 += ens.vx[i] * ens.vx[i] + ens.vy[i] * ens.vy[i] + ens.vz[i] * ens.vz[i];
        ++n;
    }
    if (n < 2) throw std::runtime_error("measure_temperature: needs >= 2 alive atoms");
    const double mean_ke = 0.5 * consts.atom_mass * sum_v2 / double(n);
    return (2.0 / 3.0) * mean_ke / consts.boltzmann_k;
}

double peak_density(const Ensemble& ens, const TrapSpec& trap) {
    const std::size_t n = ens.n_alive();
    if (n < 2) throw std::runtime_error("peak_density: needs >= 2 alive atoms");
    const double temp = measure_temperature(ens, trap.consts);
    const TrapFrequencies freqs = trap_frequencies(trap);
    const double wr = 2.0 * M_PI * freqs.f_radial;
    const double wz = 2.0 * M_PI * freqs.f_axial;
    const double arg = trap.consts.atom_mass / (2.0 * M_PI * trap.consts.boltzmann_k * temp);
    return double(n) * wr * wr * wz * std::pow(arg, 1.5);
}

} // namespace qsim
