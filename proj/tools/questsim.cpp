// questsim: batch experiments on a modulated Gaussian-beam dipole trap.
// Subcommands: spectrum, timesweep, depthsweep, image, validate.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qsim/config.hpp"
#include "qsim/io.hpp"
#include "qsim/rng.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "questsim 1.0.0";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    int64_t seed = -1;
    int workers = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "configuration file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override master seed");
    cmd->add_option("--workers", opts.workers, "override worker count");
}

qsim::RunConfig load(const CommonOpts& opts, int axis_override) {
    qsim::RunConfig cfg = qsim::parse_config(read_file(opts.config_path), axis_override);
    if (opts.seed >= 0) cfg.master_seed = uint64_t(opts.seed);
    if (opts.workers > 0) cfg.workers = opts.workers;
    return cfg;
}

int run_sweep_command(const CommonOpts& opts, qsim::SweepAxis axis, const std::string& name) {
    qsim::RunConfig cfg = load(opts, int(axis));
    if (cfg.sweep_values.empty())
        throw qsim::ConfigError("config: [sweep] values are required for " + name);

    qsim::SweepSpec spec;
    spec.base = cfg.exp;
    spec.axis = axis;
    spec.values = cfg.sweep_values;
    spec.repetitions = cfg.repetitions;
    spec.normalize = cfg.normalize;
    spec.master_seed = cfg.master_seed;
    spec.workers = cfg.workers;

    qsim::RunManifest manifest;
    manifest.tool_version = kVersion;
    manifest.subcommand = name;
    manifest.master_seed = cfg.master_seed;
    for (int r = 0; r < cfg.repetitions; ++r)
        manifest.point_seeds.push_back(qsim::mix_seed(cfg.master_seed, uint64_t(r) + 1));
    manifest.resolved_config = qsim::serialize_config(cfg);
    manifest.started_at = timestamp();

    const qsim::SweepResult result = qsim::run_sweep(spec);

    fs::create_directories(opts.out_dir);
    const std::string csv_path = (fs::path(opts.out_dir) / (name + ".csv")).string();
    qsim::write_sweep_csv(result, csv_path);
    manifest.output_files.push_back(csv_path);
    manifest.finished_at = timestamp();
    qsim::write_manifest(manifest, (fs::path(opts.out_dir) / (name + ".manifest")).string());
    std::cout << name << ": " << result.rows.size() << " rows -> " << csv_path << "\n";
    return 0;
}

int run_image_command(const CommonOpts& opts) {
    qsim::RunConfig cfg = load(opts, -1);
    fs::create_directories(opts.out_dir);

    qsim::RunManifest manifest;
    manifest.tool_version = kVersion;
    manifest.subcommand = "image";
    manifest.master_seed = cfg.master_seed;
    manifest.resolved_config = qsim::serialize_config(cfg);
    manifest.started_at = timestamp();

    // one graymap per configured duration value; a single shot at the config
    // modulation when no duration sweep is given
    std::vector<double> durations;
    if (cfg.axis == qsim::SweepAxis::duration && !cfg.sweep_values.empty())
        durations = cfg.sweep_values;
    else
        durations.push_back(cfg.exp.modulation.duration_t);

    const uint64_t seed = qsim::mix_seed(cfg.master_seed, 1);
    manifest.point_seeds.push_back(seed);
    for (double dur : durations) {
        qsim::ExperimentConfig exp = cfg.exp;
        exp.modulation.duration_t = dur;
        qsim::SampleSpec sspec = exp.sample;
        sspec.seed = seed;
        qsim::Ensemble ens = qsim::sample_thermal(exp.trap, sspec);
        qsim::evolve(ens, exp.trap, exp.modulation, exp.integration, &exp.collisions);
        qsim::expand(ens, exp.trap, exp.image.expansion_time);
        qsim::ImageSpec img_spec = exp.image;
        img_spec.noise_seed = qsim::mix_seed(seed, 0x1a6e5u);
        const qsim::CloudImage img = qsim::render(ens, img_spec);
        if (img.out_of_frame > ens.n_alive() / 100)
            std::cerr << "warning: " << img.out_of_frame
                      << " atoms out of frame at duration " << dur << " s\n";
        char name[64];
        std::snprintf(name, sizeof(name), "cloud_T%06.1fms.pgm", dur * 1e3);
        const std::string path = (fs::path(opts.out_dir) / name).string();
        qsim::write_pgm(img, path);
        manifest.output_files.push_back(path);
        std::cout << "image: duration " << dur * 1e3 << " ms -> " << path << "\n";
    }
    manifest.finished_at = timestamp();
    qsim::write_manifest(manifest, (fs::path(opts.out_dir) / "image.manifest").string());
    return 0;
}

int run_validate_command(const CommonOpts& opts) {
    const qsim::RunConfig cfg = load(opts, -1);
    for (const std::string& line : qsim::validation_report(cfg)) std::cout << line << "\n";
    std::cout << "config valid\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"parametric-resonance experiments in a Gaussian-beam dipole trap"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOpts opts;
    auto* spectrum = app.add_subcommand("spectrum", "frequency sweep");
    auto* timesweep = app.add_subcommand("timesweep", "modulation-duration sweep");
    auto* depthsweep = app.add_subcommand("depthsweep", "modulation-depth sweep");
    auto* image = app.add_subcommand("image", "single-shot expanded-cloud graymaps");
    auto* validate = app.add_subcommand("validate", "check a configuration and exit");
    for (auto* cmd : {spectrum, timesweep, depthsweep, image, validate}) add_common(cmd, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (spectrum->parsed())
            return run_sweep_command(opts, qsim::SweepAxis::frequency, "spectrum");
        if (timesweep->parsed())
            return run_sweep_command(opts, qsim::SweepAxis::duration, "timesweep");
        if (depthsweep->parsed())
            return run_sweep_command(opts, qsim::SweepAxis::depth, "depthsweep");
        if (image->parsed()) return run_image_command(opts);
        if (validate->parsed()) return run_validate_command(opts);
    } catch (const qsim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
