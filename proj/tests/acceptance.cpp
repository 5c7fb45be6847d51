// Acceptance suite: one PASS/FAIL line per criterion, exit code = number of
// failures. Heavy sweeps are shared between criteria (2+3, 5-8).

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "qsim/collisions.hpp"
#include "qsim/config.hpp"
#include "qsim/dynamics.hpp"
#include "qsim/experiments.hpp"
#include "qsim/imaging.hpp"
#include "qsim/io.hpp"
#include "qsim/sampler.hpp"

using namespace qsim;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

TrapSpec paper_trap() {
    TrapSpec trap;
    trap.depth_u0 = u0_from_radial_frequency(1.25e3, 55e-6, trap.consts.atom_mass);
    trap.beam.waist = 55e-6;
    trap.beam.rayleigh_range = 750e-6;
    return trap;
}

ExperimentConfig warm_config() {
    ExperimentConfig cfg;
    cfg.trap = paper_trap();
    cfg.sample.n_atoms = 3000;
    cfg.sample.temperature = 0.13 * cfg.trap.depth_u0 / cfg.trap.consts.boltzmann_k;
    cfg.modulation.depth_h = 0.15;
    cfg.modulation.freq_f = 2.5e3;
    cfg.modulation.duration_t = 200e-3;
    cfg.collisions.enabled = true;
    // ~110/s mean elastic rate: rethermalization without overdamping the drive
    cfg.collisions.macro_weight = 500.0;
    cfg.collisions.seed = 2024;
    cfg.image.width = 512;
    cfg.image.height = 256; // hot expanded clouds stay inside the frame
    cfg.image.blur_sigma = 12e-6;
    cfg.peak_box_halfwidth = 4; // averages enough pixels for a stable peak estimate
    return cfg;
}

std::vector<double> grid(double a, double b, double step) {
    std::vector<double> v;
    for (double x = a; x <= b + 0.5 * step; x += step) v.push_back(x);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a + double(i) * step;
    return v;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- criterion 1: cold harmonic resonance position ------------------------

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg;
    cfg.trap = paper_trap();
    cfg.sample.n_atoms = 5000;
    cfg.sample.temperature = 0.02 * cfg.trap.depth_u0 / cfg.trap.consts.boltzmann_k;
    cfg.modulation.depth_h = 0.1;
    cfg.modulation.duration_t = 100e-3;

    SweepSpec spec;
    spec.base = cfg;
    spec.axis = SweepAxis::frequency;
    spec.values = grid(1.8e3, 3.2e3, 50.0);
    spec.repetitions = 1;
    spec.master_seed = 11;

    try {
        const SweepResult res = run_sweep(spec);
        const ResonanceEstimate est = find_resonance(res, true);
        const double target = 2.0 * trap_frequencies(cfg.trap).f_radial;
        const bool pass = std::abs(est.f_min - target) <= 0.05 * target;
        report(1, pass,
               fmt("cold-start peak-survival dip at %.1f Hz vs 2 f_r = %.1f Hz "
                   "(|shift| = %.1f%%, limit 5%%) [%.0f s]",
                   est.f_min, target, 100.0 * std::abs(est.f_min - target) / target,
                   elapsed_s(t0)));
    } catch (const std::exception& e) {
        report(1, false, fmt("exception: %s", e.what()));
    }
}

// ---- criteria 2 + 3: warm red shift and sensitivity contrast ---------------

struct WarmSpectrum {
    SweepResult res;
    double f_peak = 0.0;
    bool valid = false;
};

WarmSpectrum criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    WarmSpectrum out;
    SweepSpec spec;
    spec.base = warm_config();
    spec.axis = SweepAxis::frequency;
    spec.values = grid(1.5e3, 2.7e3, 100.0);
    spec.repetitions = 2;
    spec.master_seed = 23;

    try {
        out.res = run_sweep(spec);
        const ResonanceEstimate peak = find_resonance(out.res, true);
        const ResonanceEstimate total = find_resonance(out.res, false);
        out.f_peak = peak.f_min;
        out.valid = true;
        const double two_fr = 2.0 * trap_frequencies(spec.base.trap).f_radial;
        const double shift = two_fr - total.f_min;
        const bool pass = peak.f_min < two_fr && total.f_min <= peak.f_min &&
                          shift >= 100.0 && shift <= 600.0;
        report(2, pass,
               fmt("warm dips: f_min(peak) = %.1f Hz (< 2 f_r: %s), f_min(total) = %.1f Hz "
                   "(<= f_min(peak): %s), red shift from 2 f_r = %.1f Hz (want 100-600) [%.0f s]",
                   peak.f_min, peak.f_min < two_fr ? "yes" : "no", total.f_min,
                   total.f_min <= peak.f_min ? "yes" : "no", shift, elapsed_s(t0)));
    } catch (const std::exception& e) {
        report(2, false, fmt("exception: %s", e.what()));
    }
    return out;
}

void criterion_3(const WarmSpectrum& warm) {
    if (!warm.valid) {
        report(3, false, "warm spectrum unavailable (criterion 2 failed to run)");
        return;
    }
    const auto peaks = per_value_mean(warm.res, &SweepRow::survival_peak);
    const auto totals = per_value_mean(warm.res, &SweepRow::survival_total);
    std::size_t k = 0;
    for (std::size_t i = 1; i < peaks.size(); ++i)
        if (std::abs(peaks[i].first - warm.f_peak) < std::abs(peaks[k].first - warm.f_peak))
            k = i;
    const double depletion = 1.0 - peaks[k].second;
    const double loss = 1.0 - totals[k].second;
    report(3, depletion > loss,
           fmt("at %.0f Hz: depletion contrast 1-s_peak = %.3f vs loss contrast "
               "1-s_total = %.3f",
               peaks[k].first, depletion, loss));
}

// ---- criterion 4: frequency ratio identity ---------------------------------

void criterion_4() {
    const TrapSpec trap = paper_trap();
    const TrapFrequencies f = trap_frequencies(trap);
    const double expected =
        trap.beam.waist / (std::sqrt(2.0) * trap.beam.rayleigh_range);
    const double rel = std::abs(f.f_axial / f.f_radial - expected) / expected;
    const bool pass = rel <= 1e-12 && std::abs(f.f_axial - 64.8) < 0.1;
    report(4, pass,
           fmt("f_axial/f_radial = w0/(sqrt2 z_R) to %.1e relative; f_axial = %.2f Hz at "
               "f_r = 1.25 kHz (the trap geometry implies 64.8 Hz, not the nominal 50 Hz)",
               rel, f.f_axial));
}

// ---- criteria 5-8: duration sweep at resonance ------------------------------

struct DurationData {
    SweepResult res;
    ExperimentConfig cfg;
    bool valid = false;
};

DurationData run_duration_sweep(double f_drive) {
    const auto t0 = std::chrono::steady_clock::now();
    DurationData out;
    out.cfg = warm_config();
    out.cfg.modulation.freq_f = f_drive;
    // same physical density as the spectrum runs, more atoms for peak statistics
    out.cfg.sample.n_atoms = 6000;
    out.cfg.collisions.macro_weight = 250.0;

    SweepSpec spec;
    spec.base = out.cfg;
    spec.axis = SweepAxis::duration;
    spec.values = {5e-3,  10e-3,  20e-3,  30e-3,  50e-3,  70e-3,  100e-3,
                   140e-3, 180e-3, 240e-3, 300e-3, 400e-3, 500e-3, 600e-3};
    spec.repetitions = 2;
    spec.master_seed = 37;
    try {
        out.res = run_sweep(spec);
        out.valid = true;
        std::printf("# duration sweep at %.0f Hz done [%.0f s]\n", f_drive, elapsed_s(t0));
        std::fflush(stdout);
    } catch (const std::exception& e) {
        std::printf("# duration sweep failed: %s\n", e.what());
    }
    return out;
}

void criterion_5(const DurationData& data) {
    if (!data.valid) {
        report(5, false, "duration sweep unavailable");
        return;
    }
    const auto peaks = per_value_mean(data.res, &SweepRow::survival_peak);
    const auto totals = per_value_mean(data.res, &SweepRow::survival_total);

    // (a) peak survival decays exponentially over the Fig.-4-like window
    std::vector<double> t, logp, p;
    for (const auto& [dur, s] : peaks) {
        if (dur > 300e-3 || s <= 0.01) continue;
        t.push_back(dur);
        p.push_back(s);
        logp.push_back(std::log(s));
    }
    bool pass_a = false;
    double r2_log = 0.0, r2_lin = 0.0;
    if (t.size() >= 5) {
        r2_log = linear_fit(t, logp).r2;
        r2_lin = linear_fit(t, p).r2;
        pass_a = r2_log >= 0.9 && r2_log > r2_lin && linear_fit(t, logp).slope < 0.0;
    }

    // (b) total survival: flat below a nonzero threshold, then linear decrease
    std::size_t thresh = totals.size();
    for (std::size_t i = 0; i < totals.size(); ++i)
        if (totals[i].second < 0.97) { thresh = i; break; }
    bool pass_b = false;
    double r2_post = 0.0;
    if (thresh >= 1 && thresh < totals.size()) {
        std::vector<double> td, ts;
        for (std::size_t i = thresh; i < totals.size(); ++i) {
            if (totals[i].first > 300e-3) break;
            td.push_back(totals[i].first);
            ts.push_back(totals[i].second);
        }
        if (td.size() >= 4) {
            const LinFit fit = linear_fit(td, ts);
            r2_post = fit.r2;
            pass_b = fit.r2 >= 0.9 && fit.slope < 0.0;
        }
    }
    report(5, pass_a && pass_b,
           fmt("peak decay: log-fit R^2 = %.3f (linear %.3f, want log >= 0.9 and > linear); "
               "total loss: threshold at point %zu/%zu, post-threshold R^2 = %.3f",
               r2_log, r2_lin, thresh, totals.size(), r2_post));
}

void criterion_6(const DurationData& data) {
    if (!data.valid) {
        report(6, false, "duration sweep unavailable");
        return;
    }
    const auto peaks = per_value_mean(data.res, &SweepRow::survival_peak);
    const auto totals = per_value_mean(data.res, &SweepRow::survival_total);
    const auto temps = per_value_mean(data.res, &SweepRow::temperature);
    std::vector<double> logq, logt;
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        const double q = peaks[i].second / totals[i].second;
        if (!(q > 0.0) || !(temps[i].second > 0.0)) continue;
        logq.push_back(std::log(q));
        logt.push_back(std::log(temps[i].second));
    }
    if (logq.size() < 5) {
        report(6, false, "not enough usable duration points for the temperature regression");
        return;
    }
    const LinFit fit = linear_fit(logt, logq);
    const bool pass = fit.slope >= -1.7 && fit.slope <= -1.3;
    report(6, pass,
           fmt("log(s_peak/s_total) vs log(T_c) slope = %.3f (R^2 = %.3f), want -1.5 +/- 0.2",
               fit.slope, fit.r2));
}

void criterion_7(const DurationData& data) {
    if (!data.valid) {
        report(7, false, "duration sweep unavailable");
        return;
    }
    try {
        const double omega_r = 2.0 * M_PI * trap_frequencies(data.cfg.trap).f_radial;
        const double sigma0 = std::sqrt(data.cfg.trap.consts.boltzmann_k *
                                        data.cfg.sample.temperature /
                                        data.cfg.trap.consts.atom_mass) / omega_r;
        const double rate =
            heating_rate(data.res, data.cfg.image.expansion_time, sigma0, data.cfg.trap.consts);
        const double rate_uK_s = rate * 1e6;
        const bool pass = rate_uK_s >= 1e2 && rate_uK_s <= 1e4;
        report(7, pass,
               fmt("pre-saturation heating rate = %.0f uK/s, want within [1e2, 1e4] "
                   "(exact drive coupling is not reproducible)",
                   rate_uK_s));
    } catch (const std::exception& e) {
        report(7, false, fmt("exception: %s", e.what()));
    }
}

void criterion_8(const DurationData& data) {
    if (!data.valid) {
        report(8, false, "duration sweep unavailable");
        return;
    }
    try {
        const double ratio = saturation_check(data.res, data.cfg.trap);
        const bool pass = ratio >= 0.2 && ratio <= 0.5;
        report(8, pass,
               fmt("saturated temperature k_B T_sat / U0 = %.3f, want within [0.2, 0.5]", ratio));
    } catch (const std::exception& e) {
        report(8, false, fmt("exception: %s", e.what()));
    }
}

// ---- criterion 9: exact property suites -------------------------------------

bool prop_energy_drift(std::string& msg) {
    const TrapSpec trap = paper_trap();
    const ModulationSpec off{};
    SampleSpec ss;
    ss.n_atoms = 200;
    ss.temperature = 0.02 * trap.depth_u0 / trap.consts.boltzmann_k;
    ss.seed = 71;
    Ensemble ens = sample_thermal(trap, ss);
    std::vector<double> e0(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i)
        e0[i] = total_energy(trap, {ens.x[i], ens.y[i], ens.z[i]},
                             {ens.vx[i], ens.vy[i], ens.vz[i]}, 0.0, off);
    const double dt = 1.0 / (3000.0 * trap_frequencies(trap).f_radial);
    for (int s = 0; s < 100000; ++s) step(ens, trap, off, dt);
    double drift = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const double e = total_energy(trap, {ens.x[i], ens.y[i], ens.z[i]},
                                      {ens.vx[i], ens.vy[i], ens.vz[i]}, 0.0, off);
        drift = std::max(drift, std::abs(e - e0[i]) / std::abs(e0[i]));
    }
    msg += fmt("energy drift %.1e (<1e-6); ", drift);
    return drift < 1e-6;
}

bool prop_collision_conservation(std::string& msg) {
    const TrapSpec trap = paper_trap();
    const double m = trap.consts.atom_mass;
    std::mt19937_64 eng(5);
    std::normal_distribution<double> pos(0.0, 20e-6), vel(0.0, 0.08);
    Ensemble ens;
    ens.resize(2000);
    for (std::size_t i = 0; i < ens.size(); ++i) {
        ens.x[i] = pos(eng); ens.y[i] = pos(eng); ens.z[i] = pos(eng);
        ens.vx[i] = vel(eng); ens.vy[i] = vel(eng); ens.vz[i] = vel(eng);
    }
    CollisionSpec cs;
    cs.enabled = true;
    cs.cell_size_radial = 15e-6;
    cs.cell_size_axial = 15e-6;
    cs.macro_weight = 1e5;
    cs.seed = 4;
    double px0 = 0, ke0 = 0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        px0 += m * ens.vx[i];
        ke0 += 0.5 * m *
               (ens.vx[i] * ens.vx[i] + ens.vy[i] * ens.vy[i] + ens.vz[i] * ens.vz[i]);
    }
    for (int pass = 0; pass < 10; ++pass) collide(ens, cs, trap, 1e-5);
    double px1 = 0, ke1 = 0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        px1 += m * ens.vx[i];
        ke1 += 0.5 * m *
               (ens.vx[i] * ens.vx[i] + ens.vy[i] * ens.vy[i] + ens.vz[i] * ens.vz[i]);
    }
    const double dke = std::abs(ke1 - ke0) / ke0;
    const double dpx = std::abs(px1 - px0) / (m * 0.08 * std::sqrt(2000.0));
    msg += fmt("collision dKE %.1e, dP %.1e (<=1e-12); ", dke, dpx);
    return dke <= 1e-12 && dpx <= 1e-12;
}

bool prop_equipartition(std::string& msg) {
    TrapSpec trap = paper_trap();
    trap.depth_u0 *= 8.0; // deep harmonic regime for 65 uK
    SampleSpec ss;
    ss.n_atoms = 100000;
    ss.temperature = 65e-6;
    ss.seed = 8;
    const Ensemble ens = sample_thermal(trap, ss);
    const double t_meas = measure_temperature(ens, trap.consts);
    const double rel = std::abs(t_meas - ss.temperature) / ss.temperature;
    msg += fmt("equipartition dev %.1e (<2e-2); ", rel);
    return rel < 0.02;
}

bool prop_fit_recovery(std::string& msg) {
    ImageSpec spec;
    CloudImage img;
    img.width = spec.width;
    img.height = spec.height;
    img.pixel_size = spec.pixel_size;
    img.pixels.resize(std::size_t(spec.width) * spec.height);
    const double A = 80.0, z0 = 25e-6, x0 = -40e-6, rz = 260e-6, rx = 130e-6, B = 3.0;
    for (int r = 0; r < spec.height; ++r)
        for (int c = 0; c < spec.width; ++c) {
            const double zc = (c - 0.5 * spec.width + 0.5) * spec.pixel_size;
            const double xc = (r - 0.5 * spec.height + 0.5) * spec.pixel_size;
            img.at(r, c) = A * std::exp(-0.5 * (zc - z0) * (zc - z0) / (rz * rz) -
                                        0.5 * (xc - x0) * (xc - x0) / (rx * rx)) + B;
        }
    const GaussFit fit = fit_gaussian(img);
    double worst = std::abs(fit.amplitude - A) / A;
    worst = std::max(worst, std::abs(fit.r_axial - rz) / rz);
    worst = std::max(worst, std::abs(fit.r_radial - rx) / rx);
    worst = std::max(worst, std::abs(fit.center_z - z0) / rz);
    worst = std::max(worst, std::abs(fit.center_x - x0) / rx);
    msg += fmt("fit recovery dev %.1e (<1e-3); ", worst);
    return fit.converged && worst < 1e-3;
}

bool prop_count_conservation(std::string& msg) {
    const PhysConsts consts;
    std::mt19937_64 eng(12);
    std::normal_distribution<double> pos(0.0, 200e-6);
    Ensemble ens;
    ens.resize(30000);
    for (std::size_t i = 0; i < ens.size(); ++i) {
        ens.x[i] = pos(eng); ens.y[i] = pos(eng); ens.z[i] = pos(eng);
    }
    ImageSpec plain;
    ImageSpec blurred;
    blurred.blur_sigma = 25e-6;
    const CloudImage a = render(ens, plain);
    const CloudImage b = render(ens, blurred);
    const double exact = double(ens.size() - a.out_of_frame);
    const bool ok = integrated_intensity(a) == exact &&
                    std::abs(integrated_intensity(b) - exact) <= 1e-9 * exact;
    msg += fmt("count conservation %s; ", ok ? "exact" : "VIOLATED");
    return ok;
}

bool prop_replay(std::string& msg) {
    ExperimentConfig cfg;
    cfg.trap = paper_trap();
    cfg.sample.n_atoms = 120;
    cfg.sample.temperature = 65e-6;
    cfg.modulation.depth_h = 0.15;
    cfg.modulation.freq_f = 2.5e3;
    cfg.modulation.duration_t = 3e-3;
    SweepSpec spec;
    spec.base = cfg;
    spec.axis = SweepAxis::frequency;
    spec.values = {2.3e3, 2.5e3};
    spec.repetitions = 1;
    spec.master_seed = 9;
    const std::string a = sweep_csv_string(run_sweep(spec));
    const std::string b = sweep_csv_string(run_sweep(spec));
    msg += fmt("replay %s; ", a == b ? "byte-identical" : "DIVERGED");
    return a == b;
}

bool prop_thermometry(std::string& msg) {
    const PhysConsts consts;
    const double t = temperature_from_expansion(10e-6, 0.0, 237e-6, 3e-3, consts.atom_mass,
                                                consts.boltzmann_k);
    const double rel = std::abs(t - 65e-6) / 65e-6;
    msg += fmt("thermometry 10um/237um/3ms -> %.2f uK (65 +/- 1%%)", t * 1e6);
    return rel < 0.01;
}

void criterion_9() {
    std::string msg;
    bool pass = true;
    try {
        pass &= prop_energy_drift(msg);
        pass &= prop_collision_conservation(msg);
        pass &= prop_equipartition(msg);
        pass &= prop_fit_recovery(msg);
        pass &= prop_count_conservation(msg);
        pass &= prop_replay(msg);
        pass &= prop_thermometry(msg);
    } catch (const std::exception& e) {
        pass = false;
        msg += fmt("exception: %s", e.what());
    }
    report(9, pass, msg);
}

} // namespace

int main() {
    std::printf("# acceptance suite, single process\n");
    criterion_1();
    const WarmSpectrum warm = criterion_2();
    criterion_3(warm);
    criterion_4();
    const double f_drive = warm.valid ? 50.0 * std::round(warm.f_peak / 50.0) : 1.9e3;
    const DurationData durations = run_duration_sweep(f_drive);
    criterion_5(durations);
    criterion_6(durations);
    criterion_7(durations);
    criterion_8(durations);
    criterion_9();
    std::printf("# %d of 9 criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
