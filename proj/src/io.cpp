#include "qsim/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qsim {

namespace {

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

constexpr const char* kHeader =
    "value,rep,seed,survival_total,survival_peak,r_axial_m,r_radial_m,temperature_K,"
    "n_alive,converged";

} // namespace

std::string sweep_csv_string(const SweepResult& result) {
    std::ostringstream out;
    out << kHeader << "\n";
    for (const SweepRow& r : result.rows) {
        out << fmt9(r.value) << ',' << r.rep << ',' << r.seed << ','
            << fmt9(r.survival_total) << ',' << fmt9(r.survival_peak) << ','
            << fmt9(r.r_axial) << ',' << fmt9(r.r_radial) << ','
            << fmt9(r.temperature) << ',' << r.n_alive << ',' << (r.converged ? 1 : 0)
            << "\n";
    }
    return out.str();
}

void write_sweep_csv(const SweepResult& result, const std::string& path) {
    if (result.rows.empty())
        throw std::invalid_argument("write_sweep_csv: result is empty");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_sweep_csv: cannot open " + path);
    out << sweep_csv_string(result);
    if (!out) throw std::runtime_error("write_sweep_csv: write failed for " + path);
}

SweepResult read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_sweep_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kHeader)
        throw std::runtime_error("read_sweep_csv: bad header in " + path);
    SweepResult result;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 10)
            throw std::runtime_error("read_sweep_csv: malformed row in " + path);
        SweepRow r;
        r.value = std::stod(fields[0]);
        r.rep = std::stoi(fields[1]);
        r.seed = std::stoull(fields[2]);
        r.survival_total = std::stod(fields[3]);
        r.survival_peak = std::stod(fields[4]);
        r.r_axial = std::stod(fields[5]);
        r.r_radial = std::stod(fields[6]);
        r.temperature = std::stod(fields[7]);
        r.n_alive = std::stoull(fields[8]);
        r.converged = fields[9] == "1";
        result.rows.push_back(r);
    }
    return result;
}

void write_manifest(const RunManifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
    out << "tool_version = " << m.tool_version << "\n";
    out << "subcommand = " << m.subcommand << "\n";
    out << "master_seed = " << m.master_seed << "\n";
    out << "point_seeds = ";
    for (std::size_t i = 0; i < m.point_seeds.size(); ++i)
        out << (i ? " " : "") << m.point_seeds[i];
    out << "\n";
    out << "started_at = " << m.started_at << "\n";
    out << "finished_at = " << m.finished_at << "\n";
    for (const std::string& f : m.output_files) out << "output = " << f << "\n";
    out << "# resolved configuration follows\n";
    out << m.resolved_config;
    if (!out) throw std::runtime_error("write_manifest: write failed for " + path);
}

} // namespace qsim
