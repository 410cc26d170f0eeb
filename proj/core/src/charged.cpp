#include "tnresp/charged.hpp"

namespace tnresp {

double ChargedTrajectory::adjoint_defect() const {
    double worst = 0;
    for (int k = 0; k < F.size(); ++k) worst = std::max(worst, max_abs(Mat(Fdag[k] - F[k].adjoint())));
    return worst;
}

ChargedTrajectory charged_trajectory(const PropagatorTrajectory& prop, const Mat& F, const std::string& source) {
    ChargedTrajectory c;
    c.grid = prop.grid;
    c.source = source;
    c.F = heisenberg_trajectory(prop, F, source);
    c.Fdag = heisenberg_trajectory(prop, F.adjoint(), source);
    return c;
}

Dynamics charged_dynamics(const Mat& H0, const Mat& F, double hbar) { return Dynamics(H0, {F, F.adjoint()}, hbar); }

CurrentProfile charged_current(const Signal& j) {
    CurrentProfile p(j.grid, 2);
    p.add_signal(j.conj(), 0);
    p.add_signal(j, 1);
    p.tag = "charged-signal";
    return p;
}

CurrentProfile conj_swap(const CurrentProfile& p) {
    if (p.components() != 2) throw PreconditionError("conj_swap needs a two-component profile");
    CurrentProfile q = p;
    q.smooth[0] = p.smooth[1].conjugate();
    q.smooth[1] = p.smooth[0].conjugate();
    q.impulses[0] = p.impulses[1].conjugate();
    q.impulses[1] = p.impulses[0].conjugate();
    return q;
}

cplx charged_characteristic_functional(const ChargedArgs& a, const CurrentProfile& j, const Dynamics& dyn,
                                       const StateDensity& rho) {
    if (dyn.couplings.size() != 2) throw PreconditionError("charged functional needs the (F, Fdag) coupling pair");
    for (const Signal* s : {&a.eta_minus, &a.etabar_minus, &a.eta_plus, &a.etabar_plus})
        check_norm_cap(dyn.hbar * *s, "charged_characteristic_functional");
    CurrentProfile plus = j, minus = j;
    plus.add_signal(a.etabar_plus, 0, dyn.hbar);
    plus.add_signal(a.eta_plus, 1, dyn.hbar);
    minus.add_signal(a.etabar_minus, 0, dyn.hbar);
    minus.add_signal(a.eta_minus, 1, dyn.hbar);
    const TimeGrid& g = a.eta_plus.grid;
    auto Wp = propagate(dyn, plus, g);
    auto Wm = propagate(dyn, conj_swap(minus), g);
    return (rho.entries * Wm.final().adjoint() * Wp.final()).trace();
}

ChargedArgs charged_substitution(const ChargedEtaSigma& in, double hbar) {
    auto u = substitute_to_eta_pm(in.eta, in.sigma, hbar);
    auto b = substitute_to_eta_pm(in.etabar, in.sigmabar, hbar);
    return {u.minus, b.minus, u.plus, b.plus};
}

ChargedEtaSigma charged_substitution_inverse(const ChargedArgs& in, double hbar) {
    auto u = substitute_to_eta_sigma(in.eta_minus, in.eta_plus, hbar);
    auto b = substitute_to_eta_sigma(in.etabar_minus, in.etabar_plus, hbar);
    return {u.eta, b.eta, u.sigma, b.sigma};
}

ResponseSystem make_charged_system(const Mat& H0, const Mat& F, const StateDensity& rho, const TimeGrid& grid,
                                   double hbar) {
    return make_response_system(charged_dynamics(H0, F, hbar), rho, grid, kChargedRankCap);
}

namespace {

void labels_for(int m, int n, int k, int l, std::vector<Label>& outs, std::vector<Label>& ins) {
    if (m < 0 || n < 0 || k < 0 || l < 0) throw PreconditionError("charged orders must be non-negative");
    if (m + n + k + l > kChargedRankCap) throw PreconditionError("charged assembly limited to m+n+k+l <= 3");
    outs.assign(m, Label::f);
    outs.insert(outs.end(), n, Label::fdag);
    ins.assign(k, Label::f);
    ins.insert(ins.end(), l, Label::fdag);
}

}  // namespace

std::vector<TermDescriptor> enumerate_charged_terms(int m, int n, int k, int l, SplitRule rule) {
    std::vector<Label> outs, ins;
    labels_for(m, n, k, l, outs, ins);
    return enumerate_terms(outs, ins, rule);
}

ChargedResponse assemble_charged_response(int m, int n, int k, int l, const ResponseSystem& sys, SplitRule rule) {
    std::vector<Label> outs, ins;
    labels_for(m, n, k, l, outs, ins);
    if (sys.table->families() != 2) throw PreconditionError("charged assembly needs an (F, Fdag) system");
    ChargedResponse r;
    r.orders = {m, n, k, l};
    r.rule = rule;
    r.tensor = assemble_direct(*sys.table, outs, ins, sys.hbar(), rule);
    return r;
}

}  // namespace tnresp
