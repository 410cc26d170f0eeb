#pragma once

#include <string>
#include <vector>

#include "tnresp/fock.hpp"
#include "tnresp/grid.hpp"

namespace tnresp {

// External current driving the coupling operators. Each component c multiplies coupling
// operator c in the generator. Two parts:
//   smooth    piecewise-constant values on [t_k, t_k+1), sampled at the interval midpoint
//   impulses  weights w_k = dt * g(t_k) applied as an exact kick at t_k, half before and
//             half after the stored sample (this is how grid Signals enter, so that Riemann
//             sums and symmetric coinciding-time conventions come out exactly). Endpoint
//             impulses are allowed for auxiliary currents: the outer halves land in U(t_0)
//             and in PropagatorTrajectory::terminal, so functionals see full weights.
struct CurrentProfile {
    TimeGrid grid;
    std::vector<Vec> smooth;    // per component, length N-1
    std::vector<Vec> impulses;  // per component, length N
    std::string tag = "none";

    CurrentProfile() = default;
    CurrentProfile(const TimeGrid& g, int components);

    int components() const { return static_cast<int>(smooth.size()); }
    bool is_zero() const;
    bool is_real() const;
    bool smooth_is_zero() const;

    static CurrentProfile none(const TimeGrid& g, int components = 1) { return CurrentProfile(g, components); }
    // Riemann-sum realization of a grid signal on component c.
    static CurrentProfile from_signal(const Signal& s, int c = 0, int components = 1);

    CurrentProfile& add_signal(const Signal& s, int c = 0, cplx scale = 1.0);
    CurrentProfile& add_kick(int k, cplx weight, int c = 0);
    CurrentProfile conj() const;
};

CurrentProfile operator+(const CurrentProfile& a, const CurrentProfile& b);

struct PropagatorTrajectory {
    TimeGrid grid;
    std::vector<Mat> U;
    bool unitary_hint = true;
    double max_top_population = 0.0;
    // U(t_end) with the outer half of an endpoint impulse included; empty when there is none
    Mat terminal;

    const Mat& final() const { return terminal.size() ? terminal : U.back(); }
};

struct HeisenbergTrajectory {
    TimeGrid grid;
    std::vector<Mat> ops;
    std::string source = "none";

    const Mat& operator[](int k) const { return ops[k]; }
    int size() const { return static_cast<int>(ops.size()); }
};

// Thrown when driving pumps population onto the top Fock level beyond the monitor limit.
struct TruncationBreach : PreconditionError {
    using PreconditionError::PreconditionError;
};

struct PopulationMonitor {
    const FockSpace* space = nullptr;
    const StateDensity* rho = nullptr;
    double limit = kTopPopulationLimit;
};

// Static Hamiltonian plus the coupling operators the current components multiply.
struct Dynamics {
    Mat H0;
    std::vector<Mat> couplings;
    double hbar = 1.0;

    Dynamics() = default;
    Dynamics(const OperatorMatrix& h, const OperatorMatrix& q, double hb);
    Dynamics(Mat h, std::vector<Mat> q, double hb) : H0(std::move(h)), couplings(std::move(q)), hbar(hb) {}
    int dim() const { return static_cast<int>(H0.rows()); }
};

PropagatorTrajectory propagate(const Dynamics& dyn, const CurrentProfile& current, const TimeGrid& grid,
                               const PopulationMonitor* monitor = nullptr);
PropagatorTrajectory propagate(const OperatorMatrix& H0, const OperatorMatrix& Q, const CurrentProfile& current,
                               const TimeGrid& grid, double hbar, const PopulationMonitor* monitor = nullptr);
PropagatorTrajectory propagate_free(const Dynamics& dyn, const TimeGrid& grid);

PropagatorTrajectory interaction_factor(const PropagatorTrajectory& full, const PropagatorTrajectory& free);

HeisenbergTrajectory heisenberg_trajectory(const PropagatorTrajectory& prop, const Mat& Qs,
                                           const std::string& source = "none");

struct SchwingerPair {
    PropagatorTrajectory minus;
    PropagatorTrajectory plus;
};

// W_+ is driven by j + hbar eta_+, W_- by j + hbar conj(eta_-) so that W_-^dag realizes
// the anti-chronological exponent for complex eta_-.
SchwingerPair schwinger_propagators(const Signal& eta_minus, const Signal& eta_plus, const CurrentProfile& j,
                                    const Dynamics& dyn, const TimeGrid& grid);

double unitarity_defect(const PropagatorTrajectory& p);

}  // namespace tnresp
