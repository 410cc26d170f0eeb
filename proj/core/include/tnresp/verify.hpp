#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tnresp/charged.hpp"

namespace tnresp {

struct CheckReport {
    std::string id;
    std::string scenario;
    std::vector<std::pair<std::string, double>> metrics;
    double value = 0.0;      // headline metric compared with the tolerance
    double tolerance = 1.0;
    bool pass = false;
    bool hard = true;        // soft checks are reported but do not fail a run
    double runtime = 0.0;    // seconds
    std::uint64_t seed = 0;
    std::string detail;

    void add(const std::string& name, double v) { metrics.emplace_back(name, v); }
    double metric(const std::string& name) const;
};

// A fully specified model + state + grid, plus the pulse currents used by checks that
// need a physical drive.
struct Scenario {
    std::string id = "scenario";
    ModelSpec model;
    FockSpace space;
    StateDensity rho;
    TimeGrid grid;
    std::vector<Signal> pulses;                              // grid samples of the drives
    std::vector<std::function<double(double)>> waveforms;   // same drives as functions of t
    bool stationary = false;  // rho commutes with H0
    int rank_cap = kDefaultRankCap;
    std::uint64_t seed = 1;
    double fd_step = 0.0;  // finite-difference step, 0 for the oracle default

    OperatorMatrix hamiltonian() const { return build_hamiltonian(model, space); }
    OperatorMatrix coupling() const { return build_coupling_operator(model, space); }
    Dynamics dynamics() const { return Dynamics(hamiltonian(), coupling(), space.hbar); }
    ResponseSystem system(int rank_cap_override = 0) const;
};

// Reference scenarios of the test suite. All run in natural units.
TimeGrid default_grid();
Scenario harmonic_vacuum_scenario(const TimeGrid& grid = default_grid(), int cutoff = 12);
Scenario kerr_coherent_scenario(const TimeGrid& grid = default_grid(), double chi = 0.1, double alpha = 1.0,
                                int cutoff = 12);
Scenario kerr_thermal_scenario(const TimeGrid& grid = default_grid(), double chi = 0.1, double nbar = 0.2,
                               int cutoff = 12);

// Compactly supported waveforms on [c - 4w, c + 4w] (smooth cosine-squared taper).
Signal gaussian_pulse(const TimeGrid& grid, double amplitude, double center, double width);
Signal sine_burst(const TimeGrid& grid, double amplitude, double center, double width, double omega0);

// Drive with the smooth part sampled at step midpoints (the propagation step rule).
CurrentProfile smooth_current(const std::function<double(double)>& f, const TimeGrid& grid);

struct ClassicalOscillator {
    double omega = 1.0;
    double mass = 1.0;
    TimeGrid grid;
    Eigen::VectorXd kernel;  // D^R(t_k - t_0) = -sin(omega (t_k - t_0)) / (m omega)

    ClassicalOscillator(double w, double m, const TimeGrid& g);
    // Zero for t < 0, theta(0) = 1/2 (which is 0 here since sin(0) = 0).
    double retarded(double t) const;
};

// Displacement q_j(t_k) of m q'' = -m w^2 q - j with the same piecewise-constant smooth
// part and kicks (p -> p - w_k) as the quantum propagation. RK4 with `substeps` per step.
Signal classical_oscillator_oracle(double omega, double mass, const CurrentProfile& j, int substeps = 64);

enum class FdRoute { automatic, functional, mean };

struct FdOptions {
    double step = 0.0;  // 0: 1e-2 for up to two derivatives, 3e-2 for three
    FdRoute route = FdRoute::automatic;  // automatic: mean for m = 1, functional otherwise
};

struct FdSample {
    std::vector<int> times;  // outputs then inputs
    cplx value = 0.0;        // Richardson value from step and step/2
    double residual = 0.0;   // |f(h/2) - f(h)| / 3
};

// Finite-difference response functions. Inputs are kicks of weight eps at the input
// times in the physical current; outputs are eps / dt spikes in eta of Phi_R(eta; j),
// or (route mean) the observed <Q_j(t)> itself. Throws NumericalError when the h/4
// level shows the differences are noise dominated.
std::vector<FdSample> fd_response_oracle(const Dynamics& dyn, const StateDensity& rho, const TimeGrid& grid, int m,
                                         int n, const std::vector<std::vector<int>>& points,
                                         const FdOptions& opt = {});

// Charged linear response D^(1,0;0,1)(t; t') (f_conj = false) or D^(1,0;1,0) (true):
// Wirtinger derivative of <F_j(t)> with respect to j(t') or j*(t').
std::vector<FdSample> fd_charged_linear(const Dynamics& charged_dyn, const Mat& F, const StateDensity& rho,
                                        const TimeGrid& grid, const std::vector<std::vector<int>>& points,
                                        bool f_conj = false, const FdOptions& opt = {});

// Max |value| / max |tensor| over tuples where max(outputs) < max(inputs).
double causality_scan(const ResponseFunction& response);
double causality_scan(const CorrelationTensor& t, int outputs);

struct CheckInfo {
    std::string id;
    std::string description;
    bool hard = true;
};

const std::vector<CheckInfo>& check_catalog();
bool is_known_check(const std::string& id);

struct SuiteOptions {
    int threads = 1;
    std::uint64_t seed = 1;
};

// Run one check on a scenario. Exceptions are captured as a failed report.
CheckReport run_check(const std::string& id, const Scenario& s, const SuiteOptions& opt = {});

// Run the requested checks (all catalog checks when `ids` is empty).
std::vector<CheckReport> identity_suite(const Scenario& s, const std::vector<std::string>& ids = {},
                                        const SuiteOptions& opt = {});

// GKK minus amended rank-2 time-normal tensor (real part), with the scale max |<T_+ Q Q>|.
struct GkkComparison {
    CorrelationTensor difference;
    double scale = 1.0;
};
GkkComparison gkk_comparison(const Scenario& s);
// max |difference| / scale
double gkk_deviation(const Scenario& s);
// Same with the free-field difference on the same grid and state subtracted first; this
// removes the window-edge leakage that both models share.
double gkk_excess_deviation(const GkkComparison& model, const GkkComparison& free_field);

}  // namespace tnresp
