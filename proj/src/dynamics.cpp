#include "qsim/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qsim/collisions.hpp"
#include "qsim/sampler.hpp"

namespace qsim {

namespace {

struct TrapLocal {
    double w0sq;
    double inv_zr2;
    double mass;
    double grav; // 0 when gravity off
};

// Acceleration at fixed instantaneous depth; the sin() is hoisted out of the
// atom loop.
inline void accel_at(const TrapLocal& tl, double depth, double x, double y, double z,
                     double& ax, double& ay, double& az) {
    const double w2 = tl.w0sq + tl.w0sq * z * z * tl.inv_zr2;
    const double rho2 = x * x + y * y;
    const double common = depth * (tl.w0sq / w2) * std::exp(-2.0 * rho2 / w2);
    const double fr = -4.0 * common / w2;
    const double dw2dz = 2.0 * tl.w0sq * z * tl.inv_zr2;
    ax = (fr * x - tl.grav * tl.mass) / tl.mass;
    ay = fr * y / tl.mass;
    az = common * (dw2dz / w2) * (2.0 * rho2 / w2 - 1.0) / tl.mass;
}

TrapLocal make_local(const TrapSpec& trap) {
    TrapLocal tl;
    tl.w0sq = trap.beam.waist * trap.beam.waist;
    tl.inv_zr2 = 1.0 / (trap.beam.rayleigh_range * trap.beam.rayleigh_range);
    tl.mass = trap.consts.atom_mass;
    tl.grav = trap.gravity_enabled ? trap.consts.gravity_g : 0.0;
    return tl;
}

void compute_accel(const Ensemble& ens, const TrapLocal& tl, double depth,
                   std::vector<double>& ax, std::vector<double>& ay, std::vector<double>& az,
                   bool parallel) {
    const std::ptrdiff_t n = std::ptrdiff_t(ens.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (!ens.alive[i]) continue;
        accel_at(tl, depth, ens.x[i], ens.y[i], ens.z[i], ax[i], ay[i], az[i]);
    }
}

// Verlet update given accelerations at ens.time; leaves ax/ay/az holding the
// accelerations at the new time, so evolve needs one force pass per step.
void advance(Ensemble& ens, const TrapSpec& trap, const ModulationSpec& mod, double dt,
             std::vector<double>& ax, std::vector<double>& ay, std::vector<double>& az,
             bool parallel) {
    const TrapLocal tl = make_local(trap);
    const double t_new = ens.time + dt;
    const double depth_new = modulated_depth(trap, mod, t_new);
    const std::ptrdiff_t n = std::ptrdiff_t(ens.size());
    std::ptrdiff_t bad = -1;
#pragma omp parallel for schedule(static) reduction(max : bad) if (parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (!ens.alive[i]) continue;
        const double half = 0.5 * dt;
        double x = ens.x[i] + ens.vx[i] * dt + ax[i] * half * dt;
        double y = ens.y[i] + ens.vy[i] * dt + ay[i] * half * dt;
        double z = ens.z[i] + ens.vz[i] * dt + az[i] * half * dt;
        double ax1, ay1, az1;
        accel_at(tl, depth_new, x, y, z, ax1, ay1, az1);
        const double vx = ens.vx[i] + (ax[i] + ax1) * half;
        const double vy = ens.vy[i] + (ay[i] + ay1) * half;
        const double vz = ens.vz[i] + (az[i] + az1) * half;
        if (!(std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
              std::isfinite(vx) && std::isfinite(vy) && std::isfinite(vz))) {
            bad = i;
            continue;
        }
        ens.x[i] = x; ens.y[i] = y; ens.z[i] = z;
        ens.vx[i] = vx; ens.vy[i] = vy; ens.vz[i] = vz;
        ax[i] = ax1; ay[i] = ay1; az[i] = az1;
    }
    if (bad >= 0)
        throw std::runtime_error("step: non-finite state for atom " + std::to_string(bad) +
                                 " at t=" + std::to_string(t_new) + " s");
    ens.time = t_new;
}

void diag_row(const Ensemble& ens, const TrapSpec& trap, const ModulationSpec& mod,
              DiagnosticsSeries& diag) {
    // fixed-order serial reductions keep diagnostics deterministic
    double esum = 0.0, v2sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (!ens.alive[i]) continue;
        const Vec3 pos{ens.x[i], ens.y[i], ens.z[i]};
        const Vec3 vel{ens.vx[i], ens.vy[i], ens.vz[i]};
        esum += total_energy(trap, pos, vel, ens.time, mod);
        v2sum += vel[0] * vel[0] + vel[1] * vel[1] + vel[2] * vel[2];
        ++n;
    }
    diag.times.push_back(ens.time);
    diag.n_alive.push_back(n);
    diag.mean_energy.push_back(n > 0 ? esum / double(n) : 0.0);
    diag.temperature.push_back(
        n > 0 ? trap.consts.atom_mass * v2sum / (3.0 * double(n) * trap.consts.boltzmann_k)
              : 0.0);
}

} // namespace

double default_timestep(const TrapSpec& trap, const ModulationSpec& mod) {
    const double fmax = std::max(trap_frequencies(trap).f_radial, mod.freq_f);
    double dt = 1.0 / (64.0 * fmax);
    if (mod.freq_f > 0.0) {
        // integer steps per modulation period avoids stroboscopic aliasing
        const double period = 1.0 / mod.freq_f;
        const double n = std::max(1.0, std::round(period / dt));
        dt = period / n;
    }
    return dt;
}

void step(Ensemble& ens, const TrapSpec& trap, const ModulationSpec& mod, double dt,
          bool parallel) {
    const TrapLocal tl = make_local(trap);
    const std::size_t n = ens.size();
    std::vector<double> ax(n, 0.0), ay(n, 0.0), az(n, 0.0);
    compute_accel(ens, tl, modulated_depth(trap, mod, ens.time), ax, ay, az, parallel);
    advance(ens, trap, mod, dt, ax, ay, az, parallel);
}

void apply_loss(Ensemble& ens, const TrapSpec& trap, const ModulationSpec& mod,
                double loss_radius_factor) {
    const double k2 = loss_radius_factor * loss_radius_factor;
    const double zr = trap.beam.rayleigh_range;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (!ens.alive[i]) continue;
        const double rho2 = ens.x[i] * ens.x[i] + ens.y[i] * ens.y[i];
        const double w2 = beam_w2(trap.beam, ens.z[i]);
        const bool outside = rho2 > k2 * w2 || std::abs(ens.z[i]) > loss_radius_factor * zr;
        if (!outside) continue;
        const Vec3 pos{ens.x[i], ens.y[i], ens.z[i]};
        const Vec3 vel{ens.vx[i], ens.vy[i], ens.vz[i]};
        if (total_energy(trap, pos, vel, ens.time, mod) > 0.0) ens.alive[i] = 0;
    }
}

DiagnosticsSeries evolve(Ensemble& ens, const TrapSpec& trap, const ModulationSpec& mod,
                         const IntegrationSpec& ispec, const CollisionSpec* collisions) {
    trap.validate();
    mod.validate();
    DiagnosticsSeries diag;
    if (mod.duration_t <= 0.0) {
        diag_row(ens, trap, mod, diag);
        return diag;
    }
    double dt = ispec.dt > 0.0 ? ispec.dt : default_timestep(trap, mod);
    // land exactly on duration_t
    const std::size_t n_steps = std::size_t(std::max(1.0, std::round(mod.duration_t / dt)));
    dt = mod.duration_t / double(n_steps);
    IntegrationSpec checked = ispec;
    checked.dt = dt;
    checked.validate(trap_frequencies(trap).f_radial, mod.freq_f);

    const TrapLocal tl = make_local(trap);
    const std::size_t n = ens.size();
    std::vector<double> ax(n, 0.0), ay(n, 0.0), az(n, 0.0);
    compute_accel(ens, tl, modulated_depth(trap, mod, ens.time), ax, ay, az, ispec.parallel);

    diag_row(ens, trap, mod, diag);
    for (std::size_t s = 0; s < n_steps; ++s) {
        advance(ens, trap, mod, dt, ax, ay, az, ispec.parallel);
        apply_loss(ens, trap, mod, ispec.loss_radius_factor);
        if (collisions != nullptr && collisions->enabled) collide(ens, *collisions, trap, dt);
        if ((s + 1) % ispec.diag_interval == 0 && s + 1 < n_steps)
            diag_row(ens, trap, mod, diag);
    }
    diag_row(ens, trap, mod, diag);
    return diag;
}

} // namespace qsim
