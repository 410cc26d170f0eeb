#include "tnresp/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

namespace tnresp {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

[[noreturn]] void fail(const KeyValueFile& kv, const std::string& key, const std::string& msg) {
    std::ostringstream os;
    os << kv.source << ":" << kv.line_of(key) << ": " << key << ": " << msg;
    throw ConfigError(os.str());
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool parse_number(const std::string& s, double& out) {
    try {
        std::size_t used = 0;
        out = std::stod(s, &used);
        return used == s.size() && std::isfinite(out);
    } catch (const std::exception&) {
        return false;
    }
}

double gaussian_value(double t, double amplitude, double center, double width) {
    const double x = (t - center) / width;
    if (std::abs(x) >= 4.0) return 0.0;
    const double c = std::cos(std::numbers::pi * x / 8.0);
    return amplitude * std::exp(-0.5 * x * x) * c * c;
}

// Keys every config may contain; anything else is rejected so typos do not pass silently.
const std::vector<std::pair<std::string, std::string>>& schema_rows() {
    static const std::vector<std::pair<std::string, std::string>> rows = {
        {"scenario.id", "scenario            name used in reports"},
        {"model.kind", "harmonic            harmonic | kerr | driven_pair"},
        {"model.omega", "1                   mode frequencies, comma separated"},
        {"model.chi", "0                   Kerr nonlinearity"},
        {"model.g", "0                   pair coupling (driven_pair)"},
        {"model.mass", "1                   oscillator mass"},
        {"model.coupling", "quadrature          quadrature | number"},
        {"model.coupling_mode", "0                   mode the current couples to"},
        {"space.cutoff", "12                  Fock levels per mode, comma separated"},
        {"space.hbar", "1"},
        {"state.kind", "vacuum              vacuum | coherent | thermal"},
        {"state.alpha", "0                   coherent amplitude (real part) per mode"},
        {"state.alpha_imag", "0                   coherent amplitude (imaginary part) per mode"},
        {"state.nbar", "0                   thermal occupation per mode"},
        {"state.leak_tol", "1e-6                max population on the two top levels"},
        {"grid.t0", "-8"},
        {"grid.dt", "0.25"},
        {"grid.count", "64"},
        {"grid.pad_factor", "4"},
        {"current.N.waveform", "gaussian-pulse      gaussian-pulse | sine-burst | csv (N = 0, 1, ...)"},
        {"current.N.amplitude", "0.3"},
        {"current.N.center", "-1"},
        {"current.N.width", "1.6                 support is center +- 4 width"},
        {"current.N.omega0", "0.3                 sine-burst carrier"},
        {"current.N.file", "-                   csv: t,value rows, relative to the config file"},
        {"run.checks", "all                 check ids, comma separated, or all / none"},
        {"run.orders", "1:1                 response orders m:n to assemble and export"},
        {"run.output", "out"},
        {"run.seed", "1"},
        {"run.rank_cap", "3                   highest moment rank kept in the table"},
        {"run.threads", "1"},
        {"run.fd_step", "0                   finite-difference step, 0 for automatic"},
        {"spectral.limit", "0.01                max spectral weight in the top decade of |omega|"},
    };
    return rows;
}

bool known_key(const std::string& key) {
    if (key.rfind("current.", 0) == 0) {
        const auto dot = key.find('.', 8);
        if (dot == std::string::npos) return false;
        const std::string idx = key.substr(8, dot - 8);
        if (idx.empty() || !std::all_of(idx.begin(), idx.end(), ::isdigit)) return false;
        const std::string field = key.substr(dot + 1);
        return field == "waveform" || field == "amplitude" || field == "center" || field == "width" ||
               field == "omega0" || field == "file";
    }
    for (const auto& r : schema_rows())
        if (r.first == key) return true;
    return false;
}

}  // namespace

// ---------------------------------------------------------------- key-value file

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& source) {
    KeyValueFile kv;
    kv.source = source;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
        if (kv.entries.count(key))
            throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key " + key + " (first on line " +
                              std::to_string(kv.entries[key].second) + ")");
        kv.entries[key] = {value, lineno};
    }
    return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse(os.str(), path);
}

int KeyValueFile::line_of(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? 0 : it->second.second;
}

std::string KeyValueFile::get(const std::string& key, const std::string& fallback) const {
    auto it = entries.find(key);
    return it == entries.end() ? fallback : it->second.first;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    double v = 0.0;
    if (!parse_number(get(key, ""), v)) fail(*this, key, "expected a number, got '" + get(key, "") + "'");
    return v;
}

int KeyValueFile::get_int(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const double v = get_double(key, 0.0);
    if (v != std::floor(v) || std::abs(v) > 1e9) fail(*this, key, "expected an integer");
    return static_cast<int>(v);
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = lower(get(key, ""));
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    fail(*this, key, "expected a boolean");
}

std::vector<std::string> KeyValueFile::get_list(const std::string& key) const {
    return split_list(get(key, ""));
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& item : get_list(key)) {
        double v = 0.0;
        if (!parse_number(item, v)) fail(*this, key, "expected numbers, got '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) fail(*this, key, "empty list");
    return out;
}

// ---------------------------------------------------------------- waveforms

std::function<double(double)> WaveformSpec::function(const std::string& base_dir) const {
    const double a = amplitude, c = center, w = width, om = omega0;
    if (kind == "gaussian-pulse") return [=](double t) { return gaussian_value(t, a, c, w); };
    if (kind == "sine-burst")
        return [=](double t) { return std::sin(om * (t - c) + 0.5) * gaussian_value(t, a, c, w); };
    if (kind == "csv") {
        std::filesystem::path p(file);
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        std::ifstream f(p);
        if (!f) throw ConfigError("cannot read waveform file " + p.string());
        auto pts = std::make_shared<std::vector<std::pair<double, double>>>();
        std::string line;
        int lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            line = trim(line);
            if (line.empty() || line[0] == '#') continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            double t = 0.0, v = 0.0;
            if (!(ls >> t >> v)) {
                if (pts->empty()) continue;  // header row
                throw ConfigError(p.string() + ":" + std::to_string(lineno) + ": expected 't, value'");
            }
            if (!pts->empty() && t <= pts->back().first)
                throw ConfigError(p.string() + ":" + std::to_string(lineno) + ": times must increase");
            pts->emplace_back(t, v);
        }
        if (pts->size() < 2) throw ConfigError(p.string() + ": waveform needs at least two rows");
        return [pts](double t) {
            const auto& v = *pts;
            if (t < v.front().first || t > v.back().first) return 0.0;
            auto it = std::upper_bound(v.begin(), v.end(), t,
                                       [](double x, const std::pair<double, double>& e) { return x < e.first; });
            if (it == v.end()) return v.back().second;
            auto prev = it - 1;
            const double u = (t - prev->first) / (it->first - prev->first);
            return (1 - u) * prev->second + u * it->second;
        };
    }
    throw ConfigError("unknown waveform '" + kind + "'");
}

// ---------------------------------------------------------------- config

ScenarioConfig parse_config(const KeyValueFile& kv) {
    for (const auto& [key, value] : kv.entries)
        if (!known_key(key)) fail(kv, key, "unknown key");

    ScenarioConfig c;
    c.base_dir = std::filesystem::path(kv.source).parent_path().string();
    if (c.base_dir.empty()) c.base_dir = ".";
    c.id = kv.get("scenario.id", c.id);

    const std::string kind = lower(kv.get("model.kind", "harmonic"));
    if (kind == "harmonic") c.model.kind = ModelKind::harmonic;
    else if (kind == "kerr") c.model.kind = ModelKind::kerr;
    else if (kind == "driven_pair") c.model.kind = ModelKind::driven_pair;
    else fail(kv, "model.kind", "unknown model '" + kind + "'");
    c.model.omega = kv.get_doubles("model.omega", c.model.omega);
    c.model.chi = kv.get_double("model.chi", 0.0);
    c.model.g = kv.get_double("model.g", 0.0);
    c.model.mass = kv.get_double("model.mass", 1.0);
    const std::string coupling = lower(kv.get("model.coupling", "quadrature"));
    if (coupling == "quadrature") c.model.coupling = CouplingKind::quadrature;
    else if (coupling == "number") c.model.coupling = CouplingKind::number;
    else fail(kv, "model.coupling", "unknown coupling '" + coupling + "'");
    c.model.coupling_mode = kv.get_int("model.coupling_mode", 0);
    if (c.model.mass <= 0) fail(kv, "model.mass", "must be positive");

    c.cutoffs.clear();
    for (double v : kv.get_doubles("space.cutoff", {12.0})) {
        if (v != std::floor(v) || v < 2) fail(kv, "space.cutoff", "cutoffs must be integers >= 2");
        c.cutoffs.push_back(static_cast<int>(v));
    }
    c.hbar = kv.get_double("space.hbar", 1.0);
    if (c.hbar <= 0) fail(kv, "space.hbar", "must be positive");
    const int modes = static_cast<int>(c.cutoffs.size());
    if (static_cast<int>(c.model.omega.size()) != modes)
        fail(kv, kv.has("model.omega") ? "model.omega" : "space.cutoff", "one frequency per mode is required");
    if (c.model.coupling_mode < 0 || c.model.coupling_mode >= modes)
        fail(kv, "model.coupling_mode", "mode index out of range");

    c.state.kind = lower(kv.get("state.kind", "vacuum"));
    if (c.state.kind != "vacuum" && c.state.kind != "coherent" && c.state.kind != "thermal")
        fail(kv, "state.kind", "unknown state '" + c.state.kind + "'");
    const std::vector<double> zeros(modes, 0.0);
    c.state.alpha_re = kv.get_doubles("state.alpha", zeros);
    c.state.alpha_im = kv.get_doubles("state.alpha_imag", zeros);
    c.state.nbar = kv.get_doubles("state.nbar", zeros);
    if (static_cast<int>(c.state.alpha_re.size()) != modes) fail(kv, "state.alpha", "one value per mode");
    if (static_cast<int>(c.state.alpha_im.size()) != modes) fail(kv, "state.alpha_imag", "one value per mode");
    if (static_cast<int>(c.state.nbar.size()) != modes) fail(kv, "state.nbar", "one value per mode");
    for (double n : c.state.nbar)
        if (n < 0) fail(kv, "state.nbar", "occupations must be nonnegative");
    c.state.leak_tol = kv.get_double("state.leak_tol", kLeakTolerance);

    c.t0 = kv.get_double("grid.t0", c.t0);
    c.dt = kv.get_double("grid.dt", c.dt);
    c.count = kv.get_int("grid.count", c.count);
    c.pad_factor = kv.get_int("grid.pad_factor", c.pad_factor);
    if (c.dt <= 0) fail(kv, "grid.dt", "must be positive");
    if (c.count < 8) fail(kv, "grid.count", "need at least 8 points");
    if (c.pad_factor < 1) fail(kv, "grid.pad_factor", "must be >= 1");

    for (int i = 0;; ++i) {
        const std::string p = "current." + std::to_string(i) + ".";
        bool any = false;
        for (const char* f : {"waveform", "amplitude", "center", "width", "omega0", "file"})
            any = any || kv.has(p + f);
        if (!any) break;
        WaveformSpec w;
        w.kind = lower(kv.get(p + "waveform", w.kind));
        if (w.kind != "gaussian-pulse" && w.kind != "sine-burst" && w.kind != "csv")
            fail(kv, p + "waveform", "unknown waveform '" + w.kind + "'");
        w.amplitude = kv.get_double(p + "amplitude", w.amplitude);
        w.center = kv.get_double(p + "center", w.center);
        w.width = kv.get_double(p + "width", w.width);
        w.omega0 = kv.get_double(p + "omega0", w.omega0);
        w.file = kv.get(p + "file", "");
        if (w.width <= 0) fail(kv, p + "width", "must be positive");
        if (w.kind == "csv" && w.file.empty()) fail(kv, p + "waveform", "csv waveform needs a file");
        c.currents.push_back(w);
    }
    for (const auto& [key, value] : kv.entries) {
        if (key.rfind("current.", 0) != 0) continue;
        const int idx = std::stoi(key.substr(8));
        if (idx >= static_cast<int>(c.currents.size())) fail(kv, key, "current indices must be contiguous from 0");
    }

    const std::vector<std::string> checks = kv.has("run.checks") ? kv.get_list("run.checks")
                                                                 : std::vector<std::string>{"all"};
    for (const auto& id : checks) {
        if (id == "all") {
            for (const auto& info : check_catalog()) c.checks.push_back(info.id);
        } else if (id == "none") {
            continue;
        } else if (!is_known_check(id)) {
            fail(kv, "run.checks", "unknown check '" + id + "'");
        } else if (std::find(c.checks.begin(), c.checks.end(), id) == c.checks.end()) {
            c.checks.push_back(id);
        }
    }

    for (const auto& item : split_list(kv.get("run.orders", "1:1"))) {
        const auto colon = item.find(':');
        int m = -1, n = -1;
        try {
            if (colon == std::string::npos) throw std::invalid_argument(item);
            m = std::stoi(item.substr(0, colon));
            n = std::stoi(item.substr(colon + 1));
        } catch (const std::exception&) {
            fail(kv, "run.orders", "expected m:n, got '" + item + "'");
        }
        if (m < 0 || n < 0 || m + n < 1) fail(kv, "run.orders", "orders need m, n >= 0 and m + n >= 1");
        c.orders.emplace_back(m, n);
    }

    c.output_dir = kv.get("run.output", c.output_dir);
    const double seed = kv.get_double("run.seed", 1.0);
    if (seed < 0 || seed != std::floor(seed)) fail(kv, "run.seed", "expected a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(seed);
    c.rank_cap = kv.get_int("run.rank_cap", c.rank_cap);
    c.threads = kv.get_int("run.threads", c.threads);
    if (c.threads < 1) fail(kv, "run.threads", "must be >= 1");
    c.fd_step = kv.get_double("run.fd_step", 0.0);
    if (c.fd_step < 0) fail(kv, "run.fd_step", "must be nonnegative");
    c.spectral_limit = kv.get_double("spectral.limit", c.spectral_limit);
    return c;
}

ScenarioConfig load_config(const std::string& path) { return parse_config(KeyValueFile::load(path)); }

std::string config_schema() {
    std::ostringstream os;
    os << "# key = default        notes\n";
    for (const auto& [key, row] : schema_rows()) {
        os << key;
        for (std::size_t i = key.size(); i < 22; ++i) os << ' ';
        os << row << "\n";
    }
    return os.str();
}

Scenario build_scenario(const ScenarioConfig& cfg) {
    Scenario s;
    s.id = cfg.id;
    s.model = cfg.model;
    s.space = FockSpace(cfg.cutoffs, cfg.hbar);
    s.grid = cfg.grid();
    s.rank_cap = cfg.rank_cap;
    s.seed = cfg.seed;
    s.fd_step = cfg.fd_step;

    // truncation leak of the initial state; the state builders throw PreconditionError
    const int modes = s.space.modes();
    if (cfg.state.kind == "coherent") {
        std::vector<cplx> alpha(modes);
        for (int m = 0; m < modes; ++m) alpha[m] = cplx(cfg.state.alpha_re[m], cfg.state.alpha_im[m]);
        s.rho = coherent_state(s.space, alpha, cfg.state.leak_tol);
        s.stationary = std::all_of(alpha.begin(), alpha.end(), [](cplx a) { return a == 0.0; });
    } else if (cfg.state.kind == "thermal") {
        s.rho = thermal_state(s.space, cfg.state.nbar, cfg.state.leak_tol);
        s.stationary = true;
    } else {
        s.rho = vacuum_state(s.space);
        s.stationary = true;
    }
    // a pair coupling mixes the modes, so number-diagonal states no longer commute with H0
    if (cfg.model.kind == ModelKind::driven_pair && cfg.model.g != 0.0) s.stationary = false;

    std::vector<WaveformSpec> currents = cfg.currents;
    if (currents.empty()) {
        WaveformSpec b;
        b.kind = "sine-burst";
        b.center = 0.0;
        b.width = 1.9;
        currents = {WaveformSpec{}, b};
    }
    const double t_end = s.grid.time(s.grid.count - 1);
    for (std::size_t i = 0; i < currents.size(); ++i) {
        auto f = currents[i].function(cfg.base_dir);
        Signal sig = Signal::sample(s.grid, [&](double t) { return cplx(f(t), 0.0); }, true);
        const double peak = max_abs(sig.values);
        const std::string name = "current " + std::to_string(i);
        if (peak == 0.0) throw PreconditionError(name + " vanishes on the grid");
        // support: a current that is still on at the window edges is not contained in the window
        const double edge = std::max(std::abs(f(s.grid.t0)), std::abs(f(t_end)));
        if (edge > 1e-12 * peak) {
            std::ostringstream os;
            os << name << " does not vanish at the window edges (|j| = " << edge << " at the boundary)";
            throw PreconditionError(os.str());
        }
        const double w = top_decade_weight(sig);
        if (w > cfg.spectral_limit) {
            std::ostringstream os;
            os << name << " has spectral weight " << w << " in the top decade of |omega| (limit "
               << cfg.spectral_limit << ")";
            throw PreconditionError(os.str());
        }
        s.pulses.push_back(std::move(sig));
        s.waveforms.push_back(std::move(f));
    }
    return s;
}

ScenarioConfig with_sweep_value(const ScenarioConfig& cfg, const std::string& parameter, double value) {
    ScenarioConfig c = cfg;
    if (parameter == "chi") {
        c.model.chi = value;
    } else if (parameter == "dt") {
        if (value <= 0) throw ConfigError("sweep dt values must be positive");
        const double span = cfg.dt * (cfg.count - 1);
        const double n = span / value;
        if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
            throw ConfigError("sweep dt must divide the window span");
        c.dt = value;
        c.count = static_cast<int>(std::round(n)) + 1;
    } else if (parameter == "pad_factor") {
        if (value < 1 || value != std::floor(value)) throw ConfigError("sweep pad_factor values must be integers >= 1");
        c.pad_factor = static_cast<int>(value);
    } else if (parameter == "epsilon") {
        if (value <= 0) throw ConfigError("sweep epsilon values must be positive");
        c.fd_step = value;
    } else {
        throw ConfigError("unknown sweep parameter '" + parameter + "' (chi, dt, pad_factor, epsilon)");
    }
    std::ostringstream id;
    id << cfg.id << "-" << parameter << "-" << value;
    c.id = id.str();
    return c;
}

}  // namespace tnresp
