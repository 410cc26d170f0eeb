#pragma once

#include <string>
#include <vector>

#include "tnresp/io.hpp"

namespace tnresp::cli {

enum ExitCode { ok = 0, check_failed = 1, config_error = 2, precondition_failed = 3 };

// Command-line overrides applied on top of the config file.
struct Overrides {
    std::string out;
    long long seed = -1;
    int rank_cap = 0;
    int threads = 0;
};

ScenarioConfig load_with_overrides(const std::string& path, const Overrides& o);

// Propagates every configured current with the top-level population monitor on.
void monitor_populations(const Scenario& s);

int sweep(const ScenarioConfig& cfg, const std::string& parameter, const std::vector<double>& values);

}  // namespace tnresp::cli
