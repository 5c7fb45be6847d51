#pragma once

// Plain-text run configuration with explicit units. Sections mirror the
// simulation modules; unknown keys are hard errors with a nearest-key hint.

#include <string>
#include <vector>

#include "qsim/experiments.hpp"

namespace qsim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    ExperimentConfig exp;

    SweepAxis axis = SweepAxis::frequency;
    bool axis_set = false;
    std::vector<double> sweep_values;
    int repetitions = 3;
    bool normalize = true;
    uint64_t master_seed = 1;
    int workers = 1;

    bool write_images = false;
};

// Parse and fully resolve a config; errors carry line numbers and name the
// violated precondition. When axis_override is non-negative it fixes the
// sweep axis (CLI subcommand) before the values are interpreted.
RunConfig parse_config(const std::string& text, int axis_override = -1);

// Canonical SI re-serialization with every default materialized; embedded in
// run manifests so a run can be replayed bit-identically.
std::string serialize_config(const RunConfig& config);

// Parse-time checks that passed plus the preconditions only checkable at
// runtime; printed by the `validate` subcommand.
std::vector<std::string> validation_report(const RunConfig& config);

} // namespace qsim
