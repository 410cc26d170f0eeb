// sweep verb: one row per parameter value plus the trend it is expected to show.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <random>

#include "commands.hpp"

namespace tnresp::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Scenario free_field(Scenario s) {
    s.model.kind = ModelKind::harmonic;
    s.model.chi = 0.0;
    return s;
}

// Terminal propagator for the first current, midpoint-sampled smooth drive.
Mat terminal_propagator(const Scenario& s) {
    const CurrentProfile j = smooth_current(s.waveforms.at(0), s.grid);
    return propagate(s.dynamics(), j, s.grid).final();
}

std::vector<std::vector<int>> fd_tuples(const TimeGrid& g, std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(g.count / 4, g.count - 1);
    std::vector<std::vector<int>> pts;
    while (static_cast<int>(pts.size()) < count) {
        const int a = pick(rng), b = pick(rng), c = pick(rng);
        if (a < std::max(b, c)) continue;  // causal tuples only: elsewhere both sides vanish
        pts.push_back({a, b, c});
    }
    return pts;
}

}  // namespace

int sweep(const ScenarioConfig& cfg, const std::string& parameter, const std::vector<double>& values) {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    bool trend_ok = true;
    std::string trend;

    if (parameter == "chi") {
        columns = {"chi", "gkk_deviation", "gkk_excess_deviation"};
        trend = "excess deviation nondecreasing in chi (nonincreasing toward chi = 0)";
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        std::optional<GkkComparison> base;
        for (double chi : sorted) {
            ScenarioConfig c = with_sweep_value(cfg, parameter, chi);
            c.model.kind = ModelKind::kerr;
            const Scenario s = build_scenario(c);
            monitor_populations(s);
            if (!base) base = gkk_comparison(free_field(s));
            const GkkComparison g = gkk_comparison(s);
            rows.push_back({chi, g.difference.max_abs() / g.scale, gkk_excess_deviation(g, *base)});
        }
        for (size_t i = 1; i < rows.size(); ++i) trend_ok = trend_ok && rows[i][2] + 1e-14 >= rows[i - 1][2];
    } else if (parameter == "dt") {
        columns = {"dt", "count", "terminal_error", "ratio_to_previous", "order"};
        trend = "terminal propagator error shrinks about 4x per halving of dt (second order)";
        std::vector<double> sorted = values;
        std::sort(sorted.rbegin(), sorted.rend());
        const Scenario ref = build_scenario(with_sweep_value(cfg, parameter, sorted.back() / 8.0));
        const Mat Uref = terminal_propagator(ref);
        for (double dt : sorted) {
            const Scenario s = build_scenario(with_sweep_value(cfg, parameter, dt));
            monitor_populations(s);
            const double err = max_abs(Mat(terminal_propagator(s) - Uref));
            double ratio = kNaN, order = kNaN;
            if (!rows.empty()) {
                ratio = rows.back()[2] / err;
                order = std::log(ratio) / std::log(rows.back()[0] / dt);
                trend_ok = trend_ok && err < rows.back()[2] && order > 1.7 && order < 2.3;
            }
            rows.push_back({dt, static_cast<double>(s.grid.count), err, ratio, order});
        }
    } else if (parameter == "pad_factor") {
        columns = {"pad_factor", "causality_floor", "kernel_change_vs_largest_pad"};
        trend = "direct-form causality floor nonincreasing in pad_factor";
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        const Mat Pmax = split_kernel(with_sweep_value(cfg, parameter, sorted.back()).grid(), SplitSign::plus).matrix;
        for (double pad : sorted) {
            const Scenario s = build_scenario(with_sweep_value(cfg, parameter, pad));
            monitor_populations(s);
            const int m = std::min(2, s.rank_cap - 1);
            const double floor = causality_scan(assemble_response(m, 1, s.system()));
            const double dk = max_abs(Mat(split_kernel(s.grid, SplitSign::plus).matrix - Pmax));
            if (!rows.empty()) trend_ok = trend_ok && floor <= rows.back()[1] + 1e-14;
            rows.push_back({pad, floor, dk});
        }
    } else if (parameter == "epsilon") {
        columns = {"epsilon", "fd_error_max", "fd_residual_max"};
        trend = "none asserted: error grows as eps^4 for large steps and is noise limited for small ones";
        const Scenario s0 = build_scenario(cfg);
        monitor_populations(s0);
        const auto sys = s0.system();
        const ResponseFunction d21 = assemble_response(2, 1, sys);
        const auto pts = fd_tuples(s0.grid, cfg.seed, 8);
        for (double eps : values) {
            ScenarioConfig c = with_sweep_value(cfg, parameter, eps);
            FdOptions fo;
            fo.step = c.fd_step;
            double err = kNaN, res = kNaN;
            try {
                const auto fd = fd_response_oracle(s0.dynamics(), s0.rho, s0.grid, 2, 1, pts, fo);
                err = 0.0;
                res = 0.0;
                for (const auto& f : fd) {
                    err = std::max(err, std::abs(f.value - d21.tensor.at(f.times)));
                    res = std::max(res, f.residual);
                }
            } catch (const Error& e) {
                std::cerr << "epsilon " << eps << ": " << e.what() << "\n";
            }
            rows.push_back({eps, err, res});
        }
    } else {
        throw ConfigError("unknown sweep parameter '" + parameter + "' (chi, dt, pad_factor, epsilon)");
    }

    std::filesystem::create_directories(cfg.output_dir);
    const std::string base = cfg.output_dir + "/sweep_" + parameter;
    write_table_csv(base + ".csv", columns, rows);
    write_table_json(base + ".json", parameter, columns, rows);
    for (size_t i = 0; i < columns.size(); ++i) std::cout << (i ? "  " : "") << columns[i];
    std::cout << "\n";
    for (const auto& r : rows) {
        for (size_t i = 0; i < r.size(); ++i) std::cout << (i ? "  " : "") << r[i];
        std::cout << "\n";
    }
    std::cout << "trend: " << trend << (parameter == "epsilon" ? "" : (trend_ok ? "  [holds]" : "  [violated]"))
              << "\ntable: " << base << ".csv\n";
    return trend_ok ? ok : check_failed;
}

}  // namespace tnresp::cli
