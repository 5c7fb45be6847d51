#include "qsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace qsim {

namespace {

enum class Dim { none, frequency, time, length, temperature };

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    int line;
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double unit_scale(Dim dim, const std::string& unit, int line) {
    static const std::map<std::string, std::pair<Dim, double>> units = {
        {"Hz", {Dim::frequency, 1.0}},   {"kHz", {Dim::frequency, 1e3}},
        {"MHz", {Dim::frequency, 1e6}},  {"s", {Dim::time, 1.0}},
        {"ms", {Dim::time, 1e-3}},       {"us", {Dim::time, 1e-6}},
        {"µs", {Dim::time, 1e-6}},  {"ns", {Dim::time, 1e-9}},
        {"m", {Dim::length, 1.0}},       {"mm", {Dim::length, 1e-3}},
        {"um", {Dim::length, 1e-6}},     {"µm", {Dim::length, 1e-6}},
        {"nm", {Dim::length, 1e-9}},     {"K", {Dim::temperature, 1.0}},
        {"mK", {Dim::temperature, 1e-3}},{"uK", {Dim::temperature, 1e-6}},
        {"µK", {Dim::temperature, 1e-6}}, {"nK", {Dim::temperature, 1e-9}},
    };
    auto it = units.find(unit);
    if (it == units.end()) fail(line, "unknown unit '" + unit + "'");
    if (it->second.first != dim) fail(line, "unit '" + unit + "' has the wrong dimension here");
    return it->second.second;
}

double parse_number(const std::string& text, Dim dim, int line) {
    const std::string s = trim(text);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) fail(line, "expected a number, got '" + s + "'");
    const std::string unit = trim(std::string(end));
    if (unit.empty()) return v; // bare numbers are SI
    if (dim == Dim::none) fail(line, "'" + unit + "': this key takes a bare number");
    return v * unit_scale(dim, unit, line);
}

bool parse_bool(const std::string& text, int line) {
    const std::string s = trim(text);
    if (s == "on" || s == "true" || s == "yes" || s == "1") return true;
    if (s == "off" || s == "false" || s == "no" || s == "0") return false;
    fail(line, "expected on/off, got '" + s + "'");
}

long long parse_int(const std::string& text, int line) {
    const std::string s = trim(text);
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') fail(line, "expected an integer, got '" + s + "'");
    return v;
}

uint64_t parse_u64(const std::string& text, int line) {
    const std::string s = trim(text);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') fail(line, "expected an integer, got '" + s + "'");
    return v;
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string nearest(const std::string& word, const std::vector<std::string>& candidates) {
    std::string best;
    std::size_t best_d = std::size_t(-1);
    for (const auto& c : candidates) {
        const std::size_t d = levenshtein(word, c);
        if (d < best_d) { best_d = d; best = c; }
    }
    return best;
}

const std::map<std::string, std::vector<std::string>>& schema() {
    static const std::map<std::string, std::vector<std::string>> s = {
        {"trap", {"radial_frequency", "depth", "waist", "rayleigh_range", "gravity"}},
        {"sample", {"atoms", "temperature", "burn_in", "thinning", "proposal_scale_pos",
                    "proposal_scale_vel"}},
        {"integration", {"dt", "loss_radius_factor", "diag_interval"}},
        {"modulation", {"depth", "frequency", "duration", "phase", "random_phase"}},
        {"collisions", {"enabled", "scattering_length", "macro_weight", "cell_size_radial",
                        "cell_size_axial", "seed"}},
        {"imaging", {"pixel_size", "width", "height", "blur_sigma", "shot_noise",
                     "expansion_time", "peak_box_halfwidth"}},
        {"sweep", {"axis", "values", "repetitions", "normalize", "seed", "workers"}},
        {"output", {"write_images"}},
    };
    return s;
}

std::vector<double> parse_values(const std::string& text, Dim dim, int line) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        std::string part;
        while (std::getline(ss, part, ':')) parts.push_back(part);
        if (parts.size() != 3) fail(line, "range must be 'first : last : step'");
        const double a = parse_number(parts[0], dim, line);
        const double b = parse_number(parts[1], dim, line);
        const double step = parse_number(parts[2], dim, line);
        if (step <= 0.0 || b < a) fail(line, "range needs last >= first and step > 0");
        for (double v = a; v <= b + 0.5 * step; v += step) out.push_back(v);
        // snap to exact grid to avoid accumulation drift
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a + double(i) * step;
        return out;
    }
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(parse_number(part, dim, line));
    if (out.empty()) fail(line, "values list is empty");
    return out;
}

} // namespace

RunConfig parse_config(const std::string& text, int axis_override) {
    RunConfig cfg;
    std::vector<Entry> entries;
    {
        std::stringstream ss(text);
        std::string raw;
        std::string section;
        int line = 0;
        while (std::getline(ss, raw)) {
            ++line;
            const std::size_t hash = raw.find('#');
            if (hash != std::string::npos) raw = raw.substr(0, hash);
            const std::string s = trim(raw);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']') fail(line, "unterminated section header");
                section = trim(s.substr(1, s.size() - 2));
                if (schema().find(section) == schema().end()) {
                    std::vector<std::string> names;
                    for (const auto& [k, v] : schema()) names.push_back(k);
                    fail(line, "unknown section '" + section + "'; did you mean '" +
                                   nearest(section, names) + "'?");
                }
                continue;
            }
            const std::size_t eq = s.find('=');
            if (eq == std::string::npos) fail(line, "expected 'key = value'");
            if (section.empty()) fail(line, "key outside any [section]");
            const std::string key = trim(s.substr(0, eq));
            const auto& valid = schema().at(section);
            if (std::find(valid.begin(), valid.end(), key) == valid.end())
                fail(line, "unknown key '" + key + "' in [" + section + "]; did you mean '" +
                               nearest(key, valid) + "'?");
            entries.push_back({section, key, trim(s.substr(eq + 1)), line});
        }
    }

    bool have_depth = false, have_fradial = false;
    double depth_kelvin = 0.0, f_radial = 1.25e3;
    std::string values_raw;
    int values_line = 0;

    if (axis_override >= 0) {
        cfg.axis = SweepAxis(axis_override);
        cfg.axis_set = true;
    }

    for (const Entry& e : entries) {
        const int ln = e.line;
        auto num = [&](Dim d) { return parse_number(e.value, d, ln); };
        if (e.section == "trap") {
            if (e.key == "radial_frequency") { f_radial = num(Dim::frequency); have_fradial = true; }
            else if (e.key == "depth") { depth_kelvin = num(Dim::temperature); have_depth = true; }
            else if (e.key == "waist") cfg.exp.trap.beam.waist = num(Dim::length);
            else if (e.key == "rayleigh_range") cfg.exp.trap.beam.rayleigh_range = num(Dim::length);
            else if (e.key == "gravity") cfg.exp.trap.gravity_enabled = parse_bool(e.value, ln);
        } else if (e.section == "sample") {
            if (e.key == "atoms") {
                const long long n = parse_int(e.value, ln);
                if (n < 1) fail(ln, "sampler requires n_atoms >= 1");
                cfg.exp.sample.n_atoms = std::size_t(n);
            } else if (e.key == "temperature") {
                cfg.exp.sample.temperature = num(Dim::temperature);
                if (cfg.exp.sample.temperature <= 0.0) fail(ln, "sampler requires temperature > 0");
            } else if (e.key == "burn_in") cfg.exp.sample.burn_in = std::size_t(parse_int(e.value, ln));
            else if (e.key == "thinning") {
                const long long t = parse_int(e.value, ln);
                if (t < 1) fail(ln, "sampler requires thinning >= 1");
                cfg.exp.sample.thinning = std::size_t(t);
            } else if (e.key == "proposal_scale_pos") cfg.exp.sample.proposal_scale_pos = num(Dim::length);
            else if (e.key == "proposal_scale_vel") cfg.exp.sample.proposal_scale_vel = num(Dim::none);
        } else if (e.section == "integration") {
            if (e.key == "dt") {
                cfg.exp.integration.dt = num(Dim::time);
                if (cfg.exp.integration.dt < 0.0) fail(ln, "dt must be >= 0 (0 = auto)");
            } else if (e.key == "loss_radius_factor") {
                cfg.exp.integration.loss_radius_factor = num(Dim::none);
                if (cfg.exp.integration.loss_radius_factor < 2.0)
                    fail(ln, "dynamics requires loss_radius_factor >= 2");
            } else if (e.key == "diag_interval") {
                const long long d = parse_int(e.value, ln);
                if (d < 1) fail(ln, "diag_interval must be >= 1");
                cfg.exp.integration.diag_interval = std::size_t(d);
            }
        } else if (e.section == "modulation") {
            if (e.key == "depth") {
                cfg.exp.modulation.depth_h = num(Dim::none);
                if (cfg.exp.modulation.depth_h < 0.0 || cfg.exp.modulation.depth_h >= 1.0)
                    fail(ln, "modulation depth must be < 1 (and >= 0)");
            } else if (e.key == "frequency") {
                cfg.exp.modulation.freq_f = num(Dim::frequency);
                if (cfg.exp.modulation.freq_f < 0.0) fail(ln, "modulation frequency must be >= 0");
            } else if (e.key == "duration") {
                cfg.exp.modulation.duration_t = num(Dim::time);
                if (cfg.exp.modulation.duration_t < 0.0) fail(ln, "modulation duration must be >= 0");
            } else if (e.key == "phase") cfg.exp.modulation.phase0 = num(Dim::none);
            else if (e.key == "random_phase") cfg.exp.random_phase = parse_bool(e.value, ln);
        } else if (e.section == "collisions") {
            if (e.key == "enabled") cfg.exp.collisions.enabled = parse_bool(e.value, ln);
            else if (e.key == "scattering_length") {
                cfg.exp.collisions.scattering_length = num(Dim::length);
                if (cfg.exp.collisions.scattering_length <= 0.0)
                    fail(ln, "collisions require scattering_length > 0");
            } else if (e.key == "macro_weight") {
                cfg.exp.collisions.macro_weight = num(Dim::none);
                if (cfg.exp.collisions.macro_weight < 1.0)
                    fail(ln, "collisions require macro_weight >= 1");
            } else if (e.key == "cell_size_radial") cfg.exp.collisions.cell_size_radial = num(Dim::length);
            else if (e.key == "cell_size_axial") cfg.exp.collisions.cell_size_axial = num(Dim::length);
            else if (e.key == "seed") cfg.exp.collisions.seed = parse_u64(e.value, ln);
        } else if (e.section == "imaging") {
            if (e.key == "pixel_size") {
                cfg.exp.image.pixel_size = num(Dim::length);
                if (cfg.exp.image.pixel_size <= 0.0) fail(ln, "imaging requires pixel_size > 0");
            } else if (e.key == "width") cfg.exp.image.width = int(parse_int(e.value, ln));
            else if (e.key == "height") cfg.exp.image.height = int(parse_int(e.value, ln));
            else if (e.key == "blur_sigma") cfg.exp.image.blur_sigma = num(Dim::length);
            else if (e.key == "shot_noise") cfg.exp.image.shot_noise = parse_bool(e.value, ln);
            else if (e.key == "expansion_time") cfg.exp.image.expansion_time = num(Dim::time);
            else if (e.key == "peak_box_halfwidth")
                cfg.exp.peak_box_halfwidth = int(parse_int(e.value, ln));
        } else if (e.section == "sweep") {
            if (e.key == "axis") {
                const std::string v = trim(e.value);
                SweepAxis parsed;
                if (v == "frequency") parsed = SweepAxis::frequency;
                else if (v == "duration") parsed = SweepAxis::duration;
                else if (v == "depth") parsed = SweepAxis::depth;
                else fail(ln, "axis must be one of frequency, duration, depth");
                if (axis_override >= 0 && parsed != cfg.axis)
                    fail(ln, "config axis '" + v + "' conflicts with the subcommand");
                cfg.axis = parsed;
                cfg.axis_set = true;
            } else if (e.key == "values") { values_raw = e.value; values_line = ln; }
            else if (e.key == "repetitions") {
                cfg.repetitions = int(parse_int(e.value, ln));
                if (cfg.repetitions < 1) fail(ln, "sweep requires repetitions >= 1");
            } else if (e.key == "normalize") cfg.normalize = parse_bool(e.value, ln);
            else if (e.key == "seed") cfg.master_seed = parse_u64(e.value, ln);
            else if (e.key == "workers") {
                cfg.workers = int(parse_int(e.value, ln));
                if (cfg.workers < 1) fail(ln, "workers must be >= 1");
            }
        } else if (e.section == "output") {
            if (e.key == "write_images") cfg.write_images = parse_bool(e.value, ln);
        }
    }

    if (have_depth && have_fradial)
        throw ConfigError("config: give either trap depth or trap radial_frequency, not both");
    if (have_depth) {
        if (depth_kelvin <= 0.0) throw ConfigError("config: trap depth must be > 0");
        cfg.exp.trap.depth_u0 = cfg.exp.trap.consts.boltzmann_k * depth_kelvin;
    } else {
        cfg.exp.trap.depth_u0 = u0_from_radial_frequency(f_radial, cfg.exp.trap.beam.waist,
                                                         cfg.exp.trap.consts.atom_mass);
    }
    cfg.exp.trap.validate();
    cfg.exp.modulation.validate();
    cfg.exp.sample.validate();
    cfg.exp.image.validate();
    cfg.exp.collisions.validate();
    if (cfg.exp.sample.temperature >= cfg.exp.trap.depth_u0 / cfg.exp.trap.consts.boltzmann_k)
        throw ConfigError("config: sample temperature must be below the trap depth U0/k_B");

    if (!values_raw.empty()) {
        const Dim d = cfg.axis == SweepAxis::frequency ? Dim::frequency
                      : cfg.axis == SweepAxis::duration ? Dim::time
                                                        : Dim::none;
        cfg.sweep_values = parse_values(values_raw, d, values_line);
        for (std::size_t i = 1; i < cfg.sweep_values.size(); ++i)
            if (cfg.sweep_values[i] <= cfg.sweep_values[i - 1])
                fail(values_line, "sweep values must be strictly increasing");
        if (cfg.axis == SweepAxis::depth)
            for (double v : cfg.sweep_values)
                if (v < 0.0 || v >= 1.0) fail(values_line, "modulation depth must be < 1");
    }
    return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
    char buf[256];
    std::ostringstream out;
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return std::string(buf);
    };
    auto onoff = [](bool b) { return b ? "on" : "off"; };
    out << "[trap]\n";
    out << "depth = " << num(cfg.exp.trap.depth_u0 / cfg.exp.trap.consts.boltzmann_k) << " K\n";
    out << "waist = " << num(cfg.exp.trap.beam.waist) << " m\n";
    out << "rayleigh_range = " << num(cfg.exp.trap.beam.rayleigh_range) << " m\n";
    out << "gravity = " << onoff(cfg.exp.trap.gravity_enabled) << "\n";
    out << "[sample]\n";
    out << "atoms = " << cfg.exp.sample.n_atoms << "\n";
    out << "temperature = " << num(cfg.exp.sample.temperature) << " K\n";
    out << "burn_in = " << cfg.exp.sample.burn_in << "\n";
    out << "thinning = " << cfg.exp.sample.thinning << "\n";
    out << "proposal_scale_pos = " << num(cfg.exp.sample.proposal_scale_pos) << " m\n";
    out << "proposal_scale_vel = " << num(cfg.exp.sample.proposal_scale_vel) << "\n";
    out << "[integration]\n";
    out << "dt = " << num(cfg.exp.integration.dt) << " s\n";
    out << "loss_radius_factor = " << num(cfg.exp.integration.loss_radius_factor) << "\n";
    out << "diag_interval = " << cfg.exp.integration.diag_interval << "\n";
    out << "[modulation]\n";
    out << "depth = " << num(cfg.exp.modulation.depth_h) << "\n";
    out << "frequency = " << num(cfg.exp.modulation.freq_f) << " Hz\n";
    out << "duration = " << num(cfg.exp.modulation.duration_t) << " s\n";
    out << "phase = " << num(cfg.exp.modulation.phase0) << "\n";
    out << "random_phase = " << onoff(cfg.exp.random_phase) << "\n";
    out << "[collisions]\n";
    out << "enabled = " << onoff(cfg.exp.collisions.enabled) << "\n";
    out << "scattering_length = " << num(cfg.exp.collisions.scattering_length) << " m\n";
    out << "macro_weight = " << num(cfg.exp.collisions.macro_weight) << "\n";
    out << "cell_size_radial = " << num(cfg.exp.collisions.cell_size_radial) << " m\n";
    out << "cell_size_axial = " << num(cfg.exp.collisions.cell_size_axial) << " m\n";
    out << "seed = " << cfg.exp.collisions.seed << "\n";
    out << "[imaging]\n";
    out << "pixel_size = " << num(cfg.exp.image.pixel_size) << " m\n";
    out << "width = " << cfg.exp.image.width << "\n";
    out << "height = " << cfg.exp.image.height << "\n";
    out << "blur_sigma = " << num(cfg.exp.image.blur_sigma) << " m\n";
    out << "shot_noise = " << onoff(cfg.exp.image.shot_noise) << "\n";
    out << "expansion_time = " << num(cfg.exp.image.expansion_time) << " s\n";
    out << "peak_box_halfwidth = " << cfg.exp.peak_box_halfwidth << "\n";
    out << "[sweep]\n";
    out << "axis = "
        << (cfg.axis == SweepAxis::frequency ? "frequency"
            : cfg.axis == SweepAxis::duration ? "duration" : "depth")
        << "\n";
    if (!cfg.sweep_values.empty()) {
        out << "values = ";
        for (std::size_t i = 0; i < cfg.sweep_values.size(); ++i)
            out << (i ? ", " : "") << num(cfg.sweep_values[i]);
        out << "\n";
    }
    out << "repetitions = " << cfg.repetitions << "\n";
    out << "normalize = " << onoff(cfg.normalize) << "\n";
    out << "seed = " << cfg.master_seed << "\n";
    out << "workers = " << cfg.workers << "\n";
    out << "[output]\n";
    out << "write_images = " << onoff(cfg.write_images) << "\n";
    return out.str();
}

std::vector<std::string> validation_report(const RunConfig& cfg) {
    std::vector<std::string> report;
    const TrapFrequencies f = trap_frequencies(cfg.exp.trap);
    report.push_back("ok: trap depth U0 = " +
                     std::to_string(cfg.exp.trap.depth_u0 / cfg.exp.trap.consts.boltzmann_k * 1e6) +
                     " uK, f_radial = " + std::to_string(f.f_radial) +
                     " Hz, f_axial = " + std::to_string(f.f_axial) + " Hz");
    report.push_back("ok: modulation depth in [0, 1), frequency >= 0, duration >= 0");
    report.push_back("ok: sample temperature below U0/k_B, atoms >= 1, thinning >= 1");
    report.push_back("ok: loss_radius_factor >= 2");
    report.push_back("ok: image pixel_size > 0 and size >= 2x2");
    if (!cfg.sweep_values.empty())
        report.push_back("ok: sweep values strictly increasing, repetitions >= 1");
    report.push_back("runtime-checked: dt <= 1/(50 max(f_radial, f_mod)) after dt resolution");
    report.push_back("runtime-checked: sampler acceptance rate in (5%, 95%)");
    report.push_back("runtime-checked: image extent covers >= 4 fitted radii (out-of-frame warn)");
    report.push_back("runtime-checked: peak box not clipped at image edge");
    report.push_back("runtime-checked: finite integration state each step");
    report.push_back("runtime-checked: collision cell grid capacity");
    return report;
}

} // namespace qsim
