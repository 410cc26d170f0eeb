// tnresp: run scenarios, verification suites, sweeps and exports from a config file.

#include <chrono>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

namespace fs = std::filesystem;

namespace tnresp::cli {

ScenarioConfig load_with_overrides(const std::string& path, const Overrides& o) {
    ScenarioConfig cfg = load_config(path);
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.rank_cap > 0) cfg.rank_cap = o.rank_cap;
    if (o.threads > 0) cfg.threads = o.threads;
    return cfg;
}

void monitor_populations(const Scenario& s) {
    const Dynamics dyn = s.dynamics();
    const PopulationMonitor mon{&s.space, &s.rho, kTopPopulationLimit};
    for (size_t i = 0; i < s.pulses.size(); ++i) {
        try {
            propagate(dyn, CurrentProfile::from_signal(s.pulses[i]), s.grid, &mon);
        } catch (const TruncationBreach& e) {
            throw TruncationBreach("current " + std::to_string(i) + ": " + e.what());
        }
    }
}

}  // namespace tnresp::cli

namespace {

using namespace tnresp;
using namespace tnresp::cli;

std::string output_dir(const ScenarioConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    return cfg.output_dir;
}

std::string order_name(int m, int n) { return "D" + std::to_string(m) + "_" + std::to_string(n); }

// Checks and the report; returns the exit code of the check stage.
int run_checks(const ScenarioConfig& cfg, const Scenario& s, const std::string& dir,
               const std::vector<std::string>& artifacts) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<CheckReport> reports;
    if (!cfg.checks.empty()) reports = identity_suite(s, cfg.checks, {cfg.threads, cfg.seed});
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(dir + "/report.json", report_json(cfg, reports, artifacts));
    write_text(dir + "/timing.json", timing_json(reports, total));
    bool hard_ok = true;
    for (const auto& r : reports) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.id << (r.hard ? "" : " (soft)") << "  value=" << r.value
                  << " tol=" << r.tolerance;
        if (!r.detail.empty()) std::cout << "  " << r.detail;
        std::cout << "\n";
        hard_ok = hard_ok && (r.pass || !r.hard);
    }
    std::cout << "report: " << dir << "/report.json\n";
    return hard_ok ? ok : check_failed;
}

std::vector<std::string> export_assemblies(const ScenarioConfig& cfg, const Scenario& s, const std::string& dir,
                                           bool blobs) {
    std::vector<std::string> files;
    if (cfg.orders.empty()) return files;
    int need = 0;
    for (auto [m, n] : cfg.orders) need = std::max(need, m + n);
    if (need > s.rank_cap)
        throw PreconditionError("order with m + n = " + std::to_string(need) + " exceeds rank cap " +
                                std::to_string(s.rank_cap));
    const auto sys = s.system();
    for (auto [m, n] : cfg.orders) {
        const std::string base = order_name(m, n);
        const ResponseFunction r = assemble_response(m, n, sys);
        write_tensor_csv(dir + "/" + base + ".csv", r.tensor, r.outputs());
        files.push_back(base + ".csv");
        if (r.tensor.rank() == 2) {
            write_surface_csv(dir + "/" + base + "_surface.csv", r.tensor);
            files.push_back(base + "_surface.csv");
        }
        if (blobs) {
            write_tensor_blob(dir + "/" + base + ".tnrb", r.tensor);
            files.push_back(base + ".tnrb");
        }
        if (n >= 1) {
            write_text(dir + "/" + base + "_terms.json", term_audit_json(m, n));
            files.push_back(base + "_terms.json");
        }
    }
    return files;
}

int cmd_run(const ScenarioConfig& cfg, bool with_checks, bool with_assemblies) {
    const Scenario s = build_scenario(cfg);
    monitor_populations(s);
    const std::string dir = output_dir(cfg);
    std::vector<std::string> files;
    if (with_assemblies) files = export_assemblies(cfg, s, dir, false);
    for (size_t i = 0; i < s.pulses.size(); ++i) {
        const std::string f = "current_" + std::to_string(i) + ".csv";
        write_signal_csv(dir + "/" + f, s.pulses[i]);
        files.push_back(f);
    }
    if (!with_checks) {
        write_text(dir + "/report.json", report_json(cfg, {}, files));
        return ok;
    }
    return run_checks(cfg, s, dir, files);
}

int cmd_export(const ScenarioConfig& cfg) {
    const Scenario s = build_scenario(cfg);
    monitor_populations(s);
    const std::string dir = output_dir(cfg);
    std::vector<std::string> files = export_assemblies(cfg, s, dir, true);
    const Dynamics dyn = s.dynamics();
    for (auto sign : {SplitSign::plus, SplitSign::minus}) {
        const std::string name = sign == SplitSign::plus ? "plus" : "minus";
        write_kernel_csv(dir + "/kernel_" + name + ".csv", split_kernel(s.grid, sign));
        write_kernel_csv(dir + "/kernel_" + name + "_strict.csv", strict_split_kernel(s.grid, sign));
        files.push_back("kernel_" + name + ".csv");
        files.push_back("kernel_" + name + "_strict.csv");
    }
    const auto free = propagate_free(dyn, s.grid);
    write_trajectory_blob(dir + "/propagator_free.tnrb", free);
    write_heisenberg_blob(dir + "/coupling_heisenberg.tnrb", heisenberg_trajectory(free, s.coupling().entries, "free"));
    files.push_back("propagator_free.tnrb");
    files.push_back("coupling_heisenberg.tnrb");
    for (size_t i = 0; i < s.pulses.size(); ++i) {
        const std::string tag = "current_" + std::to_string(i);
        write_signal_csv(dir + "/" + tag + ".csv", s.pulses[i]);
        write_trajectory_blob(dir + "/propagator_" + tag + ".tnrb",
                              propagate(dyn, CurrentProfile::from_signal(s.pulses[i]), s.grid));
        files.push_back(tag + ".csv");
        files.push_back("propagator_" + tag + ".tnrb");
    }
    write_text(dir + "/charged_terms_1_0_1_1.json", charged_term_audit_json(1, 0, 1, 1));
    files.push_back("charged_terms_1_0_1_1.json");
    write_text(dir + "/report.json", report_json(cfg, {}, files));
    std::cout << "exported " << files.size() << " files to " << dir << "\n";
    return ok;
}

int list_checks() {
    for (const auto& c : check_catalog())
        std::cout << c.id << (c.hard ? "" : " (soft)") << "\n    " << c.description << "\n";
    return ok;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cur, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != cur.size()) throw ConfigError("bad sweep value '" + cur + "'");
        out.push_back(v);
        cur.clear();
    };
    for (char c : text) {
        if (c == ',' || c == ' ') flush();
        else cur += c;
    }
    flush();
    if (out.empty()) throw ConfigError("sweep needs at least one value");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tnresp: time-normal response functions of driven oscillators"};
    app.require_subcommand(0, 1);
    bool list_flag = false;
    app.add_flag("--list-checks", list_flag, "List verification check ids");

    Overrides ov;
    std::string config;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config,-c", config, "Scenario config file")->required();
        sub->add_option("--out,-o", ov.out, "Output directory (overrides run.output)");
        sub->add_option("--seed", ov.seed, "Random seed (overrides run.seed)");
        sub->add_option("--rank-cap", ov.rank_cap, "Moment table rank cap");
        sub->add_option("--threads", ov.threads, "Worker threads for the check suite");
    };
    auto* run = app.add_subcommand("run", "Assemble the configured orders, export them and run the checks");
    add_common(run);
    auto* verify = app.add_subcommand("verify", "Run the configured checks and write report.json");
    add_common(verify);
    std::vector<std::string> only;
    verify->add_option("--check", only, "Run only these check ids");
    auto* sweep = app.add_subcommand("sweep", "Repeat the scenario per parameter value and write a trend table");
    add_common(sweep);
    std::string parameter, values;
    sweep->add_option("--parameter,-p", parameter, "chi | dt | pad_factor | epsilon")->required();
    sweep->add_option("--values,-v", values, "Comma separated values")->required();
    auto* exp = app.add_subcommand("export", "Write tensors, kernels, trajectories and term audits");
    add_common(exp);
    auto* list = app.add_subcommand("list-checks", "List verification check ids");
    auto* schema = app.add_subcommand("schema", "Print every config key with its default");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (list_flag || *list) return list_checks();
        if (*schema) {
            std::cout << config_schema();
            return ok;
        }
        if (app.get_subcommands().empty()) {
            std::cout << app.help();
            return config_error;
        }
        if (*run) return cmd_run(load_with_overrides(config, ov), true, true);
        if (*verify) {
            ScenarioConfig cfg = load_with_overrides(config, ov);
            if (!only.empty()) {
                for (const auto& id : only)
                    if (!is_known_check(id)) throw ConfigError("unknown check '" + id + "'");
                cfg.checks = only;
            }
            return cmd_run(cfg, true, false);
        }
        if (*sweep) return cli::sweep(load_with_overrides(config, ov), parameter, parse_values(values));
        if (*exp) return cmd_export(load_with_overrides(config, ov));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition failed: " << e.what() << "\n";
        return precondition_failed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return check_failed;
    }
    return ok;
}
