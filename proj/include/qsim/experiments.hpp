#pragma once

// Experiment families: frequency spectra, modulation-time sweeps and depth
// sweeps, each point paired with an unmodulated reference run sharing its
// seed; resonance position, heating rate, and saturation extraction.

#include <cstdint>
#include <string>
#include <vector>

#include "qsim/collisions.hpp"
#include "qsim/dynamics.hpp"
#include "qsim/imaging.hpp"
#include "qsim/sampler.hpp"
#include "qsim/trap.hpp"

namespace qsim {

struct ExperimentConfig {
    TrapSpec trap;
    SampleSpec sample;
    IntegrationSpec integration;
    CollisionSpec collisions;
    ModulationSpec modulation;
    ImageSpec image;
    int peak_box_halfwidth = 2;
    bool random_phase = false; // randomize modulation phase per point
};

enum class SweepAxis { frequency, duration, depth };

struct SweepSpec {
    ExperimentConfig base;
    SweepAxis axis = SweepAxis::frequency;
    std::vector<double> values; // Hz, s or dimensionless depending on axis
    int repetitions = 3;
    bool normalize = true;
    uint64_t master_seed = 1;
    int workers = 1;

    void validate() const;
};

struct SweepRow {
    double value = 0.0;
    int rep = 0;
    uint64_t seed = 0;
    double survival_total = 0.0;
    double survival_peak = 0.0;
    double r_axial = 0.0;     // m
    double r_radial = 0.0;    // m
    double temperature = 0.0; // K, ensemble temperature after modulation
    std::size_t n_alive = 0;
    bool converged = false;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::frequency;
    std::vector<SweepRow> rows; // ordered by (value index, rep)
};

struct ResonanceEstimate {
    double f_min = 0.0;       // Hz
    double depth_of_dip = 0.0;
    double uncertainty = 0.0; // Hz
    std::string method;
};

// Full pipeline for one point: sample -> evolve -> expand -> render -> fit,
// normalized against the h=0 reference with the same seed and duration.
SweepRow run_point(const ExperimentConfig& config, SweepAxis axis, double value,
                   uint64_t seed);

SweepResult run_sweep(const SweepSpec& spec);

// Parabolic fit over the 5 points bracketing the discrete minimum of the
// chosen survival curve (rows averaged per value). Throws when the minimum
// is not interior ("resonance not bracketed").
ResonanceEstimate find_resonance(const SweepResult& result, bool use_peak);

// Linear fit of expansion-thermometry temperature vs modulation time over
// the pre-saturation region (truncated where the local slope drops below
// 20% of the initial slope). sigma0 is the in-trap rms radial width.
double heating_rate(const SweepResult& duration_sweep, double t_exp, double sigma0,
                    const PhysConsts& consts);

// T_saturated k_B / U0, requiring the last three temperatures to agree
// within 5%; throws "not saturated" otherwise.
double saturation_check(const SweepResult& duration_sweep, const TrapSpec& trap);

struct LinFit {
    double slope;
    double intercept;
    double r2;
};

// Ordinary least squares line with coefficient of determination.
LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Per-value means of a column, ordered by value (helper shared with tests).
std::vector<std::pair<double, double>> per_value_mean(const SweepResult& result,
                                                      double SweepRow::*field);

} // namespace qsim
