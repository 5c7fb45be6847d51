#include "qsim/collisions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qsim/rng.hpp"
#include "qsim/sampler.hpp"

namespace qsim {

namespace {

constexpr std::size_t kMaxCells = std::size_t(1) << 22;

inline double u01(uint64_t& state) {
    return double(splitmix64(state) >> 11) * 0x1.0p-53;
}

struct Grid {
    double x0, y0, z0;
    double hr, hz; // cell edge lengths, radial and axial
    std::size_t nx, ny, nz;
    std::size_t n_cells() const { return nx * ny * nz; }
};

bool build_grid(const Ensemble& ens, double hr, double hz, Grid& g) {
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0, zmin = 0, zmax = 0;
    bool first = true;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (!ens.alive[i]) continue;
        if (first) {
            xmin = xmax = ens.x[i];
            ymin = ymax = ens.y[i];
            zmin = zmax = ens.z[i];
            first = false;
        } else {
            xmin = std::min(xmin, ens.x[i]); xmax = std::max(xmax, ens.x[i]);
            ymin = std::min(ymin, ens.y[i]); ymax = std::max(ymax, ens.y[i]);
            zmin = std::min(zmin, ens.z[i]); zmax = std::max(zmax, ens.z[i]);
        }
    }
    if (first) return false; // nothing alive
    g.x0 = xmin; g.y0 = ymin; g.z0 = zmin;
    g.hr = hr; g.hz = hz;
    g.nx = std::size_t((xmax - xmin) / hr) + 1;
    g.ny = std::size_t((ymax - ymin) / hr) + 1;
    g.nz = std::size_t((zmax - zmin) / hz) + 1;
    return g.n_cells() <= kMaxCells;
}

} // namespace

void collide(Ensemble& ens, const CollisionSpec& cspec, const TrapSpec& trap, double dt) {
    if (!cspec.enabled) return;
    cspec.validate();
    if (dt <= 0.0) throw std::invalid_argument("collide: dt must be > 0");

    double hr = cspec.cell_size_radial > 0.0 ? cspec.cell_size_radial : trap.beam.waist / 4.0;
    double hz = cspec.cell_size_axial > 0.0 ? cspec.cell_size_axial
                                            : trap.beam.rayleigh_range / 10.0;

    Grid grid;
    bool ok = build_grid(ens, hr, hz, grid);
    if (!ok && ens.n_alive() > 0) {
        // cloud outgrew the cell budget: coarsen once, then give up
        hr *= 2.0;
        hz *= 2.0;
        ok = build_grid(ens, hr, hz, grid);
        if (!ok) throw std::runtime_error("collide: cell grid overflow after retry");
    }
    if (ens.n_alive() < 2) return;

    // group alive atoms by cell: sort (cell, atom) pairs so the cost scales
    // with the atom count, not the grid size; ascending atom index within a
    // cell matches what a counting sort would produce
    std::vector<std::pair<uint64_t, uint32_t>> order;
    order.reserve(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (!ens.alive[i]) continue;
        const std::size_t cx = std::size_t((ens.x[i] - grid.x0) / grid.hr);
        const std::size_t cy = std::size_t((ens.y[i] - grid.y0) / grid.hr);
        const std::size_t cz = std::size_t((ens.z[i] - grid.z0) / grid.hz);
        order.emplace_back((cz * grid.ny + cy) * grid.nx + cx, uint32_t(i));
    }
    std::sort(order.begin(), order.end());
    std::vector<uint32_t> members(order.size());
    std::vector<uint32_t> run_begin;  // index into members, one per occupied cell
    std::vector<uint64_t> run_cell;
    for (std::size_t k = 0; k < order.size(); ++k) {
        members[k] = order[k].second;
        if (k == 0 || order[k].first != order[k - 1].first) {
            run_begin.push_back(uint32_t(k));
            run_cell.push_back(order[k].first);
        }
    }
    run_begin.push_back(uint32_t(members.size()));

    const double sigma = 8.0 * M_PI * cspec.scattering_length * cspec.scattering_length;
    const double cell_volume = grid.hr * grid.hr * grid.hz;
    const uint64_t step_index = uint64_t(std::llround(ens.time / dt));

    const std::ptrdiff_t nruns = std::ptrdiff_t(run_cell.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t ri = 0; ri < nruns; ++ri) {
        const uint64_t c = run_cell[ri];
        const uint32_t begin = run_begin[ri], end = run_begin[ri + 1];
        const uint32_t m = end - begin;
        if (m < 2) continue;

        double vmax2 = 0.0;
        for (uint32_t k = begin; k < end; ++k) {
            const uint32_t i = members[k];
            const double v2 = ens.vx[i] * ens.vx[i] + ens.vy[i] * ens.vy[i] +
                              ens.vz[i] * ens.vz[i];
            vmax2 = std::max(vmax2, v2);
        }
        const double vrel_max = 2.0 * std::sqrt(vmax2);
        if (vrel_max <= 0.0) continue;

        uint64_t rng = mix_seed(cspec.seed, uint64_t(c), step_index);
        const double expected = 0.5 * double(m) * double(m - 1) * cspec.macro_weight *
                                sigma * vrel_max * dt / cell_volume;
        std::size_t n_cand = std::size_t(expected);
        if (u01(rng) < expected - double(n_cand)) ++n_cand;

        for (std::size_t cand = 0; cand < n_cand; ++cand) {
            const uint32_t a = begin + uint32_t(u01(rng) * m) % m;
            uint32_t b = begin + uint32_t(u01(rng) * (m - 1)) % (m - 1);
            if (b >= a) ++b;
            const uint32_t i = members[a], j = members[b];
            const double gx = ens.vx[i] - ens.vx[j];
            const double gy = ens.vy[i] - ens.vy[j];
            const double gz = ens.vz[i] - ens.vz[j];
            const double g = std::sqrt(gx * gx + gy * gy + gz * gz);
            if (u01(rng) * vrel_max >= g) continue;
            // isotropic post-collision relative direction
            const double cth = 1.0 - 2.0 * u01(rng);
            const double sth = std::sqrt(std::max(0.0, 1.0 - cth * cth));
            const double phi = 2.0 * M_PI * u01(rng);
            const double ngx = g * sth * std::cos(phi);
            const double ngy = g * sth * std::sin(phi);
            const double ngz = g * cth;
            const double cmx = 0.5 * (ens.vx[i] + ens.vx[j]);
            const double cmy = 0.5 * (ens.vy[i] + ens.vy[j]);
            const double cmz = 0.5 * (ens.vz[i] + ens.vz[j]);
            ens.vx[i] = cmx + 0.5 * ngx; ens.vx[j] = cmx - 0.5 * ngx;
            ens.vy[i] = cmy + 0.5 * ngy; ens.vy[j] = cmy - 0.5 * ngy;
            ens.vz[i] = cmz + 0.5 * ngz; ens.vz[j] = cmz - 0.5 * ngz;
        }
    }
}

double collision_rate_from_conditions(double density, double scattering_length,
                                      double temperature, const PhysConsts& consts) {
    const double sigma = 8.0 * M_PI * scattering_length * scattering_length;
    const double vrel_mean =
        std::sqrt(16.0 * consts.boltzmann_k * temperature / (M_PI * consts.atom_mass));
    return density * sigma * vrel_mean;
}

double collision_rate_estimate(const Ensemble& ens, const CollisionSpec& cspec,
                               const TrapSpec& trap) {
    const double n_phys = peak_density(ens, trap) * cspec.macro_weight;
    const double temp = measure_temperature(ens, trap.consts);
    return collision_rate_from_conditions(n_phys, cspec.scattering_length, temp, trap.consts);
}

} // namespace qsim
