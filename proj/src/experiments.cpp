#include "qsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <thread>

#include "qsim/rng.hpp"

namespace qsim {

namespace {

struct RawObs {
    double total = 0.0;
    double peak = 0.0;
    double r_axial = 0.0;
    double r_radial = 0.0;
    double temperature = 0.0;
    std::size_t n_alive = 0;
    bool converged = false;
};

ModulationSpec with_value(const ModulationSpec& base, SweepAxis axis, double value) {
    ModulationSpec mod = base;
    switch (axis) {
        case SweepAxis::frequency: mod.freq_f = value; break;
        case SweepAxis::duration: mod.duration_t = value; break;
        case SweepAxis::depth: mod.depth_h = value; break;
    }
    return mod;
}

// One complete shot: sample, modulate, release, expand, image, fit.
RawObs run_single(const ExperimentConfig& config, const ModulationSpec& mod, uint64_t seed,
                  bool parallel_kernel) {
    SampleSpec sspec = config.sample;
    sspec.seed = seed;
    Ensemble ens = sample_thermal(config.trap, sspec);

    ModulationSpec run_mod = mod;
    if (config.random_phase && mod.depth_h > 0.0) {
        uint64_t s = mix_seed(seed, 0x9e377900u);
        run_mod.phase0 = 2.0 * M_PI * double(splitmix64(s) >> 11) * 0x1.0p-53;
    }

    IntegrationSpec ispec = config.integration;
    ispec.parallel = parallel_kernel;
    evolve(ens, config.trap, run_mod, ispec, &config.collisions);

    RawObs obs;
    obs.n_alive = ens.n_alive();
    if (obs.n_alive >= 2) obs.temperature = measure_temperature(ens, config.trap.consts);

    expand(ens, config.trap, config.image.expansion_time);
    ImageSpec img_spec = config.image;
    img_spec.noise_seed = mix_seed(seed, 0x1a6e5u);
    const CloudImage img = render(ens, img_spec);
    obs.total = integrated_intensity(img);
    try {
        const GaussFit fit = fit_gaussian(img);
        obs.r_axial = fit.r_axial;
        obs.r_radial = fit.r_radial;
        obs.converged = fit.converged;
        obs.peak = peak_intensity(img, fit, config.peak_box_halfwidth);
    } catch (const std::exception&) {
        // degenerate image (near-total loss or fit center off frame); fall
        // back to the geometric image center so survivals stay defined
        obs.converged = false;
        GaussFit center;
        center.center_z = 0.0;
        center.center_x = 0.0;
        obs.peak = peak_intensity(img, center, config.peak_box_halfwidth);
    }
    return obs;
}

SweepRow make_row(const RawObs& run, const RawObs& ref, double value, int rep, uint64_t seed,
                  bool normalize) {
    SweepRow row;
    row.value = value;
    row.rep = rep;
    row.seed = seed;
    row.survival_total = normalize && ref.total > 0.0 ? run.total / ref.total : run.total;
    row.survival_peak = normalize && ref.peak > 0.0 ? run.peak / ref.peak : run.peak;
    row.r_axial = run.r_axial;
    row.r_radial = run.r_radial;
    row.temperature = run.temperature;
    row.n_alive = run.n_alive;
    row.converged = run.converged;
    return row;
}

void run_jobs(std::size_t n_jobs, int workers, const std::function<void(std::size_t)>& job) {
    if (workers <= 1 || n_jobs <= 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int n_threads = std::min<std::size_t>(workers, n_jobs);
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n_jobs; i = next.fetch_add(1)) job(i);
        });
    for (auto& th : pool) th.join();
}

// quadratic least squares y = c0 + c1 x + c2 x^2 on centered x
struct Quad {
    double c0, c1, c2;
    double cov11, cov22, cov12; // covariance of (c1, c2)
    double rss;
};

Quad quad_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = int(x.size());
    double a[3][4] = {};
    for (int i = 0; i < n; ++i) {
        const double b[3] = {1.0, x[i], x[i] * x[i]};
        for (int r = 0; r < 3; ++r) {
            a[r][3] += b[r] * y[i];
            for (int c = 0; c < 3; ++c) a[r][c] += b[r] * b[c];
        }
    }
    double m[3][6];
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            m[r][c] = a[r][c];
            m[r][c + 3] = r == c ? 1.0 : 0.0;
        }
    }
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-300)
            throw std::runtime_error("find_resonance: singular parabolic fit");
        if (piv != col)
            for (int c = 0; c < 6; ++c) std::swap(m[piv][c], m[col][c]);
        const double d = m[col][col];
        for (int c = 0; c < 6; ++c) m[col][c] /= d;
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col];
            for (int c = 0; c < 6; ++c) m[r][c] -= f * m[col][c];
        }
    }
    double inv[3][3];
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) inv[r][c] = m[r][c + 3];
    Quad q;
    q.c0 = q.c1 = q.c2 = 0.0;
    double coef[3] = {0, 0, 0};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) coef[r] += inv[r][c] * a[c][3];
    q.c0 = coef[0]; q.c1 = coef[1]; q.c2 = coef[2];
    q.rss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double res = q.c0 + q.c1 * x[i] + q.c2 * x[i] * x[i] - y[i];
        q.rss += res * res;
    }
    const double s2 = n > 3 ? q.rss / double(n - 3) : 0.0;
    q.cov11 = s2 * inv[1][1];
    q.cov22 = s2 * inv[2][2];
    q.cov12 = s2 * inv[1][2];
    return q;
}

} // namespace

void SweepSpec::validate() const {
    base.trap.validate();
    base.sample.validate();
    base.modulation.validate();
    base.image.validate();
    base.collisions.validate();
    if (values.empty()) throw std::invalid_argument("sweep values must be non-empty");
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] <= values[i - 1])
            throw std::invalid_argument("sweep values must be strictly increasing");
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (axis == SweepAxis::depth)
        for (double v : values)
            if (v < 0.0 || v >= 1.0)
                throw std::invalid_argument("modulation depth values must be in [0, 1)");
}

SweepRow run_point(const ExperimentConfig& config, SweepAxis axis, double value,
                   uint64_t seed) {
    const ModulationSpec mod = with_value(config.modulation, axis, value);
    const RawObs run = run_single(config, mod, seed, true);
    ModulationSpec ref_mod = mod;
    ref_mod.depth_h = 0.0;
    const RawObs ref = run_single(config, ref_mod, seed, true);
    return make_row(run, ref, value, 0, seed, true);
}

SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    const std::size_t nv = spec.values.size();
    const std::size_t nr = std::size_t(spec.repetitions);
    const bool inner_parallel = spec.workers <= 1;

    // reference runs are shared: one per (seed, duration)
    std::vector<uint64_t> rep_seed(nr);
    for (std::size_t r = 0; r < nr; ++r) rep_seed[r] = mix_seed(spec.master_seed, r + 1);

    struct RefKey {
        uint64_t seed;
        double duration;
        bool operator<(const RefKey& o) const {
            return seed != o.seed ? seed < o.seed : duration < o.duration;
        }
    };
    std::map<RefKey, RawObs> refs;
    std::vector<RefKey> ref_keys;
    for (std::size_t r = 0; r < nr; ++r) {
        if (spec.axis == SweepAxis::duration) {
            for (double v : spec.values) ref_keys.push_back({rep_seed[r], v});
        } else {
            ref_keys.push_back({rep_seed[r], spec.base.modulation.duration_t});
        }
    }
    for (const RefKey& k : ref_keys) refs[k]; // materialize slots before threading

    run_jobs(ref_keys.size(), spec.workers, [&](std::size_t i) {
        const RefKey& k = ref_keys[i];
        ModulationSpec mod = spec.base.modulation;
        mod.depth_h = 0.0;
        mod.duration_t = k.duration;
        refs[k] = run_single(spec.base, mod, k.seed, inner_parallel);
    });

    SweepResult result;
    result.axis = spec.axis;
    result.rows.resize(nv * nr);
    run_jobs(nv * nr, spec.workers, [&](std::size_t i) {
        const std::size_t vi = i / nr, r = i % nr;
        const double value = spec.values[vi];
        const uint64_t seed = rep_seed[r];
        const ModulationSpec mod = with_value(spec.base.modulation, spec.axis, value);
        const RawObs run = run_single(spec.base, mod, seed, inner_parallel);
        const RefKey key{seed, mod.duration_t};
        result.rows[i] = make_row(run, refs.at(key), value, int(r), seed, spec.normalize);
    });
    return result;
}

std::vector<std::pair<double, double>> per_value_mean(const SweepResult& result,
                                                      double SweepRow::*field) {
    std::vector<std::pair<double, double>> out;
    std::size_t i = 0;
    while (i < result.rows.size()) {
        const double v = result.rows[i].value;
        double sum = 0.0;
        std::size_t n = 0;
        while (i < result.rows.size() && result.rows[i].value == v) {
            sum += result.rows[i].*field;
            ++n;
            ++i;
        }
        out.emplace_back(v, sum / double(n));
    }
    return out;
}

ResonanceEstimate find_resonance(const SweepResult& result, bool use_peak) {
    const auto means =
        per_value_mean(result, use_peak ? &SweepRow::survival_peak : &SweepRow::survival_total);
    const std::size_t n = means.size();
    if (n < 5) throw std::invalid_argument("find_resonance: needs >= 5 swept frequencies");

    std::size_t imin = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (means[i].second < means[imin].second) imin = i;
    if (imin == 0 || imin == n - 1)
        throw std::runtime_error("find_resonance: resonance not bracketed");

    const std::size_t lo = std::min(std::max<std::ptrdiff_t>(0, std::ptrdiff_t(imin) - 2),
                                    std::ptrdiff_t(n) - 5);
    const double fc = means[imin].first;
    std::vector<double> x(5), y(5);
    for (int k = 0; k < 5; ++k) {
        x[k] = means[lo + k].first - fc;
        y[k] = means[lo + k].second;
    }
    const Quad q = quad_fit(x, y);
    if (q.c2 <= 0.0) throw std::runtime_error("find_resonance: resonance not bracketed");

    ResonanceEstimate est;
    est.f_min = fc - q.c1 / (2.0 * q.c2);
    if (est.f_min < means.front().first || est.f_min > means.back().first)
        throw std::runtime_error("find_resonance: resonance not bracketed");
    est.depth_of_dip = 1.0 - (q.c0 - q.c1 * q.c1 / (4.0 * q.c2));
    const double d1 = -1.0 / (2.0 * q.c2);
    const double d2 = q.c1 / (2.0 * q.c2 * q.c2);
    const double var = d1 * d1 * q.cov11 + d2 * d2 * q.cov22 + 2.0 * d1 * d2 * q.cov12;
    const double grid = (means.back().first - means.front().first) / double(n - 1);
    est.uncertainty = var > 0.0 ? std::sqrt(var) : 0.5 * grid;
    est.method = "parabolic-5pt";
    return est;
}

LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("linear_fit: needs >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i]; sy += y[i];
        sxx += x[i] * x[i]; sxy += x[i] * y[i]; syy += y[i] * y[i];
    }
    const double dn = double(n);
    const double denom = dn * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LinFit fit;
    fit.slope = (dn * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / dn;
    const double ss_tot = syy - sy * sy / dn;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

double heating_rate(const SweepResult& duration_sweep, double t_exp, double sigma0,
                    const PhysConsts& consts) {
    const auto radii = per_value_mean(duration_sweep, &SweepRow::r_radial);
    if (radii.size() < 4 || t_exp <= 0.0)
        throw std::invalid_argument("heating_rate: needs >= 4 durations and t_exp > 0");

    std::vector<double> durs, temps;
    for (const auto& [dur, r] : radii) {
        if (r <= sigma0) continue; // unphysical width; drop the point
        durs.push_back(dur);
        temps.push_back(temperature_from_expansion(sigma0, 0.0, r, t_exp, consts.atom_mass,
                                                   consts.boltzmann_k));
    }
    if (temps.size() < 4) throw std::runtime_error("heating_rate: insufficient pre-saturation points");

    // truncate at saturation: drop the tail once the local slope falls below
    // 20% of the initial slope (only meaningful for a heating sweep)
    const double s0 = (temps[1] - temps[0]) / (durs[1] - durs[0]);
    std::size_t keep = temps.size();
    if (s0 > 0.0) {
        for (std::size_t i = 1; i + 1 < temps.size(); ++i) {
            const double si = (temps[i + 1] - temps[i]) / (durs[i + 1] - durs[i]);
            if (si < 0.2 * s0) { keep = i + 1; break; }
        }
    }
    if (keep < 4) throw std::runtime_error("heating_rate: insufficient pre-saturation points");
    durs.resize(keep);
    temps.resize(keep);
    return linear_fit(durs, temps).slope;
}

double saturation_check(const SweepResult& duration_sweep, const TrapSpec& trap) {
    const auto temps = per_value_mean(duration_sweep, &SweepRow::temperature);
    if (temps.size() < 3) throw std::runtime_error("saturation_check: not saturated");
    const double t1 = temps[temps.size() - 3].second;
    const double t2 = temps[temps.size() - 2].second;
    const double t3 = temps[temps.size() - 1].second;
    const double mean = (t1 + t2 + t3) / 3.0;
    const double spread = std::max({t1, t2, t3}) - std::min({t1, t2, t3});
    if (mean <= 0.0 || spread / mean >= 0.05)
        throw std::runtime_error("saturation_check: not saturated");
    return mean * trap.consts.boltzmann_k / trap.depth_u0;
}

} // namespace qsim
