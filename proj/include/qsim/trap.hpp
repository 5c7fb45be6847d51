#pragma once

// Time-modulated Gaussian-beam optical dipole trap: potential, force,
// harmonic frequencies. Coordinates: x,y radial (gravity, when enabled,
// acts along -x), z axial (beam propagation).

#include <array>
#include <cmath>
#include <stdexcept>

namespace qsim {

using Vec3 = std::array<double, 3>;

struct PhysConsts {
    double atom_mass = 1.44316e-25;   // kg, 87Rb
    double boltzmann_k = 1.380649e-23; // J/K
    double gravity_g = 9.81;           // m/s^2
};

struct BeamGeometry {
    double waist = 55e-6;          // w0, m
    double rayleigh_range = 750e-6; // z_R, m (independent input, not lambda-derived)
};

struct TrapSpec {
    double depth_u0 = 6.733e-27;   // J, magnitude of potential at the focus
    BeamGeometry beam;
    bool gravity_enabled = false;
    PhysConsts consts;

    void validate() const {
        if (depth_u0 <= 0.0) throw std::invalid_argument("trap depth_u0 must be > 0");
        if (beam.waist <= 0.0) throw std::invalid_argument("beam waist must be > 0");
        if (beam.rayleigh_range <= 0.0) throw std::invalid_argument("rayleigh_range must be > 0");
        if (consts.atom_mass <= 0.0 || consts.boltzmann_k <= 0.0 || consts.gravity_g <= 0.0)
            throw std::invalid_argument("physical constants must be > 0");
    }
};

// Fractional sinusoidal modulation of the trap depth, active for t <= duration_t.
struct ModulationSpec {
    double depth_h = 0.0;    // dimensionless, in [0, 1)
    double freq_f = 0.0;     // Hz
    double duration_t = 0.0; // s
    double phase0 = 0.0;     // rad

    void validate() const {
        if (depth_h < 0.0 || depth_h >= 1.0)
            throw std::invalid_argument("modulation depth must be in [0, 1)");
        if (freq_f < 0.0) throw std::invalid_argument("modulation frequency must be >= 0");
        if (duration_t < 0.0) throw std::invalid_argument("modulation duration must be >= 0");
    }
};

struct TrapFrequencies {
    double f_radial; // Hz
    double f_axial;  // Hz
};

// Instantaneous trap depth U0(t) = U0 * (1 + h sin(2 pi f t + phi)).
inline double modulated_depth(const TrapSpec& trap, const ModulationSpec& mod, double t) {
    if (t <= mod.duration_t && mod.depth_h != 0.0)
        return trap.depth_u0 * (1.0 + mod.depth_h * std::sin(2.0 * M_PI * mod.freq_f * t + mod.phase0));
    return trap.depth_u0;
}

// Squared beam radius w(z)^2 = w0^2 (1 + (z/z_R)^2).
inline double beam_w2(const BeamGeometry& beam, double z) {
    const double u = z / beam.rayleigh_range;
    return beam.waist * beam.waist * (1.0 + u * u);
}

// U(rho,z,t) = -U0(t) [w0/w(z)]^2 exp(-2 rho^2 / w(z)^2), plus m g x when enabled.
inline double potential(const TrapSpec& trap, const Vec3& pos, double t, const ModulationSpec& mod) {
    const double w2 = beam_w2(trap.beam, pos[2]);
    const double rho2 = pos[0] * pos[0] + pos[1] * pos[1];
    const double w0sq = trap.beam.waist * trap.beam.waist;
    double u = -modulated_depth(trap, mod, t) * (w0sq / w2) * std::exp(-2.0 * rho2 / w2);
    if (trap.gravity_enabled)
        u += trap.consts.atom_mass * trap.consts.gravity_g * pos[0];
    return u;
}

// Analytic -grad U.
inline Vec3 force(const TrapSpec& trap, const Vec3& pos, double t, const ModulationSpec& mod) {
    const double zr = trap.beam.rayleigh_range;
    const double w0sq = trap.beam.waist * trap.beam.waist;
    const double w2 = beam_w2(trap.beam, pos[2]);
    const double rho2 = pos[0] * pos[0] + pos[1] * pos[1];
    const double a = modulated_depth(trap, mod, t);
    const double e = std::exp(-2.0 * rho2 / w2);
    const double common = a * (w0sq / w2) * e;
    // radial: -dU/dx = -4 A (w0^2/w2) e x / w2
    const double fr = -4.0 * common / w2;
    // axial: dw2/dz = 2 w0^2 z / z_R^2
    const double dw2dz = 2.0 * w0sq * pos[2] / (zr * zr);
    const double fz = common * (dw2dz / w2) * (2.0 * rho2 / w2 - 1.0);
    Vec3 f{fr * pos[0], fr * pos[1], fz};
    if (trap.gravity_enabled)
        f[0] -= trap.consts.atom_mass * trap.consts.gravity_g;
    return f;
}

// Harmonic expansion about the focus: omega_r = sqrt(4 U0 / (m w0^2)),
// omega_z = sqrt(2 U0 / (m z_R^2)).
inline TrapFrequencies trap_frequencies(const TrapSpec& trap) {
    const double m = trap.consts.atom_mass;
    const double wr = std::sqrt(4.0 * trap.depth_u0 / (m * trap.beam.waist * trap.beam.waist));
    const double wz = std::sqrt(2.0 * trap.depth_u0 /
                                (m * trap.beam.rayleigh_range * trap.beam.rayleigh_range));
    return {wr / (2.0 * M_PI), wz / (2.0 * M_PI)};
}

// Inverse of the radial harmonic expansion, so configs can be given by the
// measured radial frequency: U0 = m (2 pi f_r)^2 w0^2 / 4.
inline double u0_from_radial_frequency(double f_radial, double waist, double mass) {
    if (f_radial <= 0.0 || waist <= 0.0 || mass <= 0.0)
        throw std::invalid_argument("u0_from_radial_frequency: all arguments must be > 0");
    const double wr = 2.0 * M_PI * f_radial;
    return mass * wr * wr * waist * waist / 4.0;
}

inline double kinetic_energy(double mass, const Vec3& vel) {
    return 0.5 * mass * (vel[0] * vel[0] + vel[1] * vel[1] + vel[2] * vel[2]);
}

// KE + U; an atom is bound iff total_energy < 0 (gravity off).
inline double total_energy(const TrapSpec& trap, const Vec3& pos, const Vec3& vel,
                           double t, const ModulationSpec& mod) {
    return kinetic_energy(trap.consts.atom_mass, vel) + potential(trap, pos, t, mod);
}

} // namespace qsim
