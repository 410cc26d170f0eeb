#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tnresp/verify.hpp"

namespace tnresp {

// Flat "key = value" text; '#' starts a comment. Keys are dotted (model.kind, grid.dt).
// Duplicate keys and malformed lines raise ConfigError with the line number.
struct KeyValueFile {
    std::string source = "<string>";
    std::map<std::string, std::pair<std::string, int>> entries;  // key -> (value, line)

    static KeyValueFile parse(const std::string& text, const std::string& source = "<string>");
    static KeyValueFile load(const std::string& path);

    bool has(const std::string& key) const { return entries.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
    int line_of(const std::string& key) const;
};

struct WaveformSpec {
    std::string kind = "gaussian-pulse";  // gaussian-pulse | sine-burst | csv
    double amplitude = 0.3;
    double center = -1.0;
    double width = 1.6;
    double omega0 = 0.3;
    std::string file;  // csv: columns t, value (linear interpolation, zero outside)

    // Waveform as a function of time. csv files are read relative to `base_dir`.
    std::function<double(double)> function(const std::string& base_dir) const;
};

struct StateSpec {
    std::string kind = "vacuum";  // vacuum | coherent | thermal
    std::vector<double> alpha_re{0.0}, alpha_im{0.0};
    std::vector<double> nbar{0.0};
    double leak_tol = kLeakTolerance;
};

struct ScenarioConfig {
    std::string id = "scenario";
    std::string base_dir = ".";
    ModelSpec model;
    std::vector<int> cutoffs{12};
    double hbar = 1.0;
    StateSpec state;
    double t0 = -8.0, dt = 0.25;
    int count = 64, pad_factor = 4;
    std::vector<WaveformSpec> currents;
    std::vector<std::string> checks;                 // empty: none; "all" expands to the catalog
    std::vector<std::pair<int, int>> orders;         // assemblies to export
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    int rank_cap = kDefaultRankCap;
    int threads = 1;
    double fd_step = 0.0;
    double spectral_limit = 0.01;

    TimeGrid grid() const { return TimeGrid(t0, dt, count, pad_factor); }
};

ScenarioConfig parse_config(const KeyValueFile& kv);
ScenarioConfig load_config(const std::string& path);

// One line per recognised key with its default, for documentation.
std::string config_schema();

// Builds the scenario and verifies preconditions: truncation leak of the initial state,
// current support inside the grid and spectral concentration. Throws PreconditionError.
Scenario build_scenario(const ScenarioConfig& cfg);

// Apply one sweep value to a config. parameter in {chi, dt, pad_factor, epsilon}; dt keeps
// the window span fixed.
ScenarioConfig with_sweep_value(const ScenarioConfig& cfg, const std::string& parameter, double value);

}  // namespace tnresp
