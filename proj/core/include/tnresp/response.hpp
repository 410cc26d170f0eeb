#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tnresp/correlators.hpp"

namespace tnresp {

// Everything the assembly needs at j = 0: dynamics, state, and the moment table of the
// coupling operators' Heisenberg trajectories (one family member per coupling).
struct ResponseSystem {
    TimeGrid grid;
    Dynamics dyn;
    StateDensity rho;
    std::shared_ptr<const MomentTable> table;

    double hbar() const { return dyn.hbar; }
    int rank_cap() const { return table->rank_cap(); }
    const HeisenbergTrajectory& q0() const { return table->trajectory(0); }
};

ResponseSystem make_response_system(const Dynamics& dyn, const StateDensity& rho, const TimeGrid& grid,
                                    int rank_cap = kDefaultRankCap);

enum class Assembly { direct, causal, kubo, oracle };
const char* to_string(Assembly a);

struct ResponseFunction {
    std::vector<int> blocks;  // {m, n} neutral, {m, n, k, l} charged; legs follow block order
    CorrelationTensor tensor;
    Assembly assembly = Assembly::direct;
    double imag_residue = 0.0;  // max |Im| / max |value| before discard

    int m() const { return blocks.at(0); }
    int n() const { return blocks.at(1); }
    int outputs() const;
    int inputs() const;
};

struct EtaSigmaPair {
    Signal eta;
    Signal sigma;
};

struct EtaPm {
    Signal minus;
    Signal plus;
};

// eta = -i (eta_+ - eta_-),  sigma = hbar (eta_+^(+) + eta_-^(-))
EtaSigmaPair substitute_to_eta_sigma(const Signal& eta_minus, const Signal& eta_plus, double hbar);
// eta_+- = +- i eta^(-+) + sigma / hbar
EtaPm substitute_to_eta_pm(const Signal& eta, const Signal& sigma, double hbar);

// Phi_R(eta; sigma) = Phi(eta_-, eta_+; j) with eta_+- from the substitution.
cplx response_functional(const Signal& eta, const Signal& sigma, const CurrentProfile& j, const Dynamics& dyn,
                         const StateDensity& rho);

struct TermDescriptor {
    std::vector<Side> output_sides;
    std::vector<Split> output_splits;
    std::vector<Side> input_sides;
    std::vector<Label> output_labels;
    std::vector<Label> input_labels;
    int sign = 1;          // (-1)^(inputs on the T_- side)
    int hbar_power = 0;    // prefactor (-i/hbar)^hbar_power
    bool differs_from_side_rule = false;  // split sign not equal to the side's sign
    std::string canonical() const;
};

enum class SplitRule { by_side, charged_display };

std::vector<TermDescriptor> enumerate_terms(int m, int n);
std::vector<TermDescriptor> enumerate_terms(const std::vector<Label>& outputs, const std::vector<Label>& inputs,
                                            SplitRule rule = SplitRule::by_side);

// Direct (order-then-split) assembly over labeled legs; returns the complex tensor before
// the reality discard. Legs: outputs first, then inputs.
CorrelationTensor assemble_direct(const MomentTable& table, const std::vector<Label>& outputs,
                                  const std::vector<Label>& inputs, double hbar, SplitRule rule = SplitRule::by_side);

ResponseFunction assemble_response(int m, int n, const ResponseSystem& sys);
ResponseFunction assemble_response_causal(int m_plus_1, int n, const ResponseSystem& sys);
ResponseFunction kubo_linear(const ResponseSystem& sys);

// Amended time-normal average (order, then split each leg by its side).
CorrelationTensor time_normal_tensor(const MomentTable& table, int rank);
double time_normal_average(const MomentTable& table, std::span<const int> times, double* imag_residue = nullptr);

// Glauber-Kelly-Kleiner ordering: split each Heisenberg operator first, then order by
// the external times (T_- block of negative parts, T_+ block of positive parts).
CorrelationTensor gkk_time_normal_tensor(const HeisenbergTrajectory& traj, const StateDensity& rho, int rank);
double gkk_time_normal_average(const HeisenbergTrajectory& traj, const StateDensity& rho, std::span<const int> times);

// Green's functions <T_- Q(t_1..t_k) T_+ Q(t'_1..t'_l)> from response functions; the map
// holds D^(m;n) keyed by (m, n). Throws PreconditionError on a missing ingredient.
CorrelationTensor reconstruct_green(int k, int l, const std::map<std::pair<int, int>, ResponseFunction>& responses,
                                    double hbar);

// Apply a split kernel to the input legs (legs >= first).
CorrelationTensor split_inputs(const CorrelationTensor& t, int first_input, SplitSign sign);

// Zeroes the imaginary part after recording max|Im|/max|value|; throws NumericalError if
// the residue exceeds `abort_tol`.
ResponseFunction finalize_real(CorrelationTensor t, std::vector<int> blocks, Assembly a, double abort_tol = 1e-8);

// Region where max(outputs) < max(inputs); tuple layout outputs-then-inputs.
bool in_forbidden_region(std::span<const int> idx, int outputs);

}  // namespace tnresp
