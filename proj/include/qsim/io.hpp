#pragma once

// Result serialization: sweep CSVs and flat key-value run manifests.

#include <string>
#include <vector>

#include "qsim/experiments.hpp"

namespace qsim {

// Header: value,rep,seed,survival_total,survival_peak,r_axial_m,r_radial_m,
// temperature_K,n_alive,converged. Doubles at 9 significant digits;
// byte-deterministic for identical results.
void write_sweep_csv(const SweepResult& result, const std::string& path);

// Parse-back of write_sweep_csv output.
SweepResult read_sweep_csv(const std::string& path);

std::string sweep_csv_string(const SweepResult& result);

struct RunManifest {
    std::string tool_version;
    std::string subcommand;
    uint64_t master_seed = 0;
    std::vector<uint64_t> point_seeds;
    std::string resolved_config; // canonical serialize_config output
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> output_files;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

} // namespace qsim
