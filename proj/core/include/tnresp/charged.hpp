#pragma once

#include <array>

#include "tnresp/response.hpp"

namespace tnresp {

struct ChargedTrajectory {
    TimeGrid grid;
    HeisenbergTrajectory F;
    HeisenbergTrajectory Fdag;
    std::string source = "none";

    // max over times of |Fdag(t) - F(t)^dag|
    double adjoint_defect() const;
};

ChargedTrajectory charged_trajectory(const PropagatorTrajectory& prop, const Mat& F, const std::string& source = "none");

// Coupling pair for charged dynamics: component 0 multiplies F, component 1 multiplies Fdag.
Dynamics charged_dynamics(const Mat& H0, const Mat& F, double hbar);

// Physical current j (coefficient of Fdag) with j* multiplying F, as Riemann kicks.
CurrentProfile charged_current(const Signal& j);

// W_- profile from a W_+-type profile: F coefficient <- conj(Fdag coefficient) and back.
CurrentProfile conj_swap(const CurrentProfile& p);

struct ChargedArgs {
    Signal eta_minus, etabar_minus, eta_plus, etabar_plus;
};

// Generator j* F + Fdag j + hbar (etabar F + Fdag eta) on each branch; W_- uses the
// conjugate-swapped arguments so its adjoint carries the T_- exponent.
cplx charged_characteristic_functional(const ChargedArgs& args, const CurrentProfile& j, const Dynamics& dyn,
                                       const StateDensity& rho);

struct ChargedEtaSigma {
    Signal eta, etabar, sigma, sigmabar;
};

ChargedArgs charged_substitution(const ChargedEtaSigma& in, double hbar);
ChargedEtaSigma charged_substitution_inverse(const ChargedArgs& in, double hbar);

struct ChargedResponse {
    std::array<int, 4> orders{};  // m, n, k, l
    CorrelationTensor tensor;     // legs: m F outputs, n Fdag outputs, k F inputs, l Fdag inputs
    Assembly assembly = Assembly::direct;
    SplitRule rule = SplitRule::by_side;
};

inline constexpr int kChargedRankCap = 3;

// System whose moment table holds F (family 0) and Fdag (family 1).
ResponseSystem make_charged_system(const Mat& H0, const Mat& F, const StateDensity& rho, const TimeGrid& grid,
                                   double hbar);

ChargedResponse assemble_charged_response(int m, int n, int k, int l, const ResponseSystem& sys,
                                          SplitRule rule = SplitRule::by_side);

std::vector<TermDescriptor> enumerate_charged_terms(int m, int n, int k, int l, SplitRule rule = SplitRule::by_side);

}  // namespace tnresp
