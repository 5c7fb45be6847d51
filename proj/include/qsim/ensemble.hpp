#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qsim {

// Phase-space state of the simulated cloud, structure-of-arrays.
struct Ensemble {
    std::vector<double> x, y, z;    // m
    std::vector<double> vx, vy, vz; // m/s
    std::vector<uint8_t> alive;
    double time = 0.0; // s
    uint64_t seed = 0;
    std::size_t n_initial = 0;

    std::size_t size() const { return x.size(); }

    std::size_t n_alive() const {
        std::size_t n = 0;
        for (uint8_t a : alive) n += a;
        return n;
    }

    void resize(std::size_t n) {
        x.resize(n); y.resize(n); z.resize(n);
        vx.resize(n); vy.resize(n); vz.resize(n);
        alive.assign(n, 1);
        n_initial = n;
    }
};

} // namespace qsim
