#pragma once

#include <cstdint>
#include <random>

namespace qsim {

// splitmix64; used to derive independent deterministic streams
// (per sweep point, per collision cell) from one master seed.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = seed;
    uint64_t h = splitmix64(s);
    s ^= a * 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= b + 0xd1b54a32d192ed03ULL;
    h ^= splitmix64(s);
    s ^= c + 0x8bb84b93962eacc9ULL;
    h ^= splitmix64(s);
    return h;
}

inline std::mt19937_64 make_engine(uint64_t seed) { return std::mt19937_64(seed); }

} // namespace qsim
