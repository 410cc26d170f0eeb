#include "tnresp/evolution.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace tnresp {

CurrentProfile::CurrentProfile(const TimeGrid& g, int components) : grid(g) {
    if (components < 1) throw PreconditionError("current needs at least one component");
    smooth.assign(components, Vec::Zero(g.count - 1));
    impulses.assign(components, Vec::Zero(g.count));
}

bool CurrentProfile::is_zero() const { return smooth_is_zero() && std::all_of(impulses.begin(), impulses.end(), [](const Vec& v) { return v.isZero(0.0); }); }

bool CurrentProfile::smooth_is_zero() const {
    return std::all_of(smooth.begin(), smooth.end(), [](const Vec& v) { return v.isZero(0.0); });
}

bool CurrentProfile::is_real() const {
    for (const auto& v : smooth)
        if (v.imag().cwiseAbs().maxCoeff() != 0.0) return false;
    for (const auto& v : impulses)
        if (v.imag().cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
}

CurrentProfile CurrentProfile::from_signal(const Signal& s, int c, int components) {
    CurrentProfile p(s.grid, components);
    p.add_signal(s, c);
    p.tag = "signal";
    return p;
}

CurrentProfile& CurrentProfile::add_signal(const Signal& s, int c, cplx scale) {
    require_same_grid(grid, s.grid, "current profile");
    if (c < 0 || c >= components()) throw PreconditionError("current component out of range");
    impulses[c] += (scale * grid.dt) * s.values;
    return *this;
}

CurrentProfile& CurrentProfile::add_kick(int k, cplx weight, int c) {
    if (k < 0 || k >= grid.count) throw PreconditionError("kick index out of range");
    if (c < 0 || c >= components()) throw PreconditionError("current component out of range");
    impulses[c](k) += weight;
    return *this;
}

CurrentProfile CurrentProfile::conj() const {
    CurrentProfile p = *this;
    for (auto& v : p.smooth) v = v.conjugate();
    for (auto& v : p.impulses) v = v.conjugate();
    return p;
}

CurrentProfile operator+(const CurrentProfile& a, const CurrentProfile& b) {
    require_same_grid(a.grid, b.grid, "current sum");
    if (a.components() != b.components()) throw PreconditionError("current component count mismatch");
    CurrentProfile p = a;
    for (int c = 0; c < a.components(); ++c) {
        p.smooth[c] += b.smooth[c];
        p.impulses[c] += b.impulses[c];
    }
    if (a.tag == "none") p.tag = b.tag;
    return p;
}

Dynamics::Dynamics(const OperatorMatrix& h, const OperatorMatrix& q, double hb)
    : H0(h.entries), couplings{q.entries}, hbar(hb) {}

namespace {

bool is_hermitian(const Mat& m) {
    const double s = max_abs(m);
    return max_abs(Mat(m - m.adjoint())) <= 1e-14 * std::max(s, 1e-300);
}

// exp(factor * A) for Hermitian A through its eigenbasis, general exponential otherwise.
struct ExpHelper {
    bool herm = false;
    Eigen::VectorXd evals;
    Mat evecs;

    explicit ExpHelper(const Mat& A) {
        herm = is_hermitian(A);
        if (herm) {
            Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.adjoint()));
            evals = es.eigenvalues();
            evecs = es.eigenvectors();
        }
    }
    Mat exp(cplx factor) const {
        Vec d(evals.size());
        for (int i = 0; i < evals.size(); ++i) d(i) = std::exp(factor * evals(i));
        return evecs * d.asDiagonal() * evecs.adjoint();
    }
};

Mat general_exp(const Mat& G) { return G.exp(); }

class Stepper {
public:
    Stepper(const Dynamics& dyn, double dt) : dyn_(dyn), dt_(dt), h0_(dyn.H0) {
        free_step_ = h0_.herm ? h0_.exp(-I_UNIT * dt / dyn.hbar) : general_exp((-I_UNIT * dt / dyn.hbar) * dyn.H0);
        if (dyn.couplings.size() == 1) q_.emplace_back(dyn.couplings[0]);
    }

    const Mat& free_step() const { return free_step_; }

    Mat step(const std::vector<cplx>& coeffs) const {
        bool zero = true;
        for (auto c : coeffs) zero &= (c == 0.0);
        if (zero) return free_step_;
        Mat G = dyn_.H0;
        for (size_t c = 0; c < coeffs.size(); ++c) G += coeffs[c] * dyn_.couplings[c];
        const cplx f = -I_UNIT * dt_ / dyn_.hbar;
        if (is_hermitian(G)) return ExpHelper(G).exp(f);
        return general_exp(f * G);
    }

    // exp(-(i/hbar) * sum_c w_c Q_c / 2)
    Mat half_kick(const std::vector<cplx>& w) const {
        const int D = dyn_.dim();
        bool zero = true;
        for (auto c : w) zero &= (c == 0.0);
        if (zero) return Mat::Identity(D, D);
        if (q_.size() == 1 && q_[0].herm) return q_[0].exp(-I_UNIT * w[0] * 0.5 / dyn_.hbar);
        Mat G = Mat::Zero(D, D);
        for (size_t c = 0; c < w.size(); ++c) G += w[c] * dyn_.couplings[c];
        return general_exp((-I_UNIT * 0.5 / dyn_.hbar) * G);
    }

private:
    const Dynamics& dyn_;
    double dt_;
    ExpHelper h0_;
    std::vector<ExpHelper> q_;
    Mat free_step_;
};

void check_monitor(const PopulationMonitor* mon, const Mat& U, PropagatorTrajectory& out, int k) {
    if (!mon || !mon->space || !mon->rho) return;
    Mat r = U * mon->rho->entries * U.adjoint();
    const double tr = r.trace().real();
    if (tr > 0) r /= tr;
    const double p = top_level_population(*mon->space, r);
    out.max_top_population = std::max(out.max_top_population, p);
    if (p > mon->limit)
        throw TruncationBreach("top-level Fock population " + std::to_string(p) + " exceeds " +
                               std::to_string(mon->limit) + " at grid index " + std::to_string(k) +
                               "; raise the cutoff or lower the drive");
}

}  // namespace

PropagatorTrajectory propagate(const Dynamics& dyn, const CurrentProfile& current, const TimeGrid& grid,
                               const PopulationMonitor* monitor) {
    require_same_grid(grid, current.grid, "propagate");
    const int N = grid.count;
    const int C = current.components();
    if (C != static_cast<int>(dyn.couplings.size()))
        throw PreconditionError("current components differ from coupling operator count");
    for (const auto& q : dyn.couplings)
        if (q.rows() != dyn.dim() || q.cols() != dyn.dim()) throw PreconditionError("coupling dimension mismatch");
    Stepper st(dyn, grid.dt);
    PropagatorTrajectory out;
    out.grid = grid;
    out.unitary_hint = current.is_real() && is_hermitian(dyn.H0);
    for (const auto& q : dyn.couplings) out.unitary_hint = out.unitary_hint && is_hermitian(q);
    out.U.reserve(N);
    std::vector<cplx> s(C), w(C), w_next(C);
    for (int c = 0; c < C; ++c) w[c] = current.impulses[c](0);
    out.U.push_back(st.half_kick(w));
    check_monitor(monitor, out.U.back(), out, 0);

    for (int k = 0; k + 1 < N; ++k) {
        for (int c = 0; c < C; ++c) {
            s[c] = current.smooth[c](k);
            w_next[c] = current.impulses[c](k + 1);
        }
        Mat U = st.half_kick(w_next) * st.step(s) * st.half_kick(w) * out.U.back();
        out.U.push_back(std::move(U));
        check_monitor(monitor, out.U.back(), out, k + 1);
        w = w_next;
    }
    bool edge = false;
    for (auto c : w) edge |= (c != 0.0);
    if (edge) out.terminal = st.half_kick(w) * out.U.back();
    return out;
}

PropagatorTrajectory propagate(const OperatorMatrix& H0, const OperatorMatrix& Q, const CurrentProfile& current,
                               const TimeGrid& grid, double hbar, const PopulationMonitor* monitor) {
    return propagate(Dynamics(H0, Q, hbar), current, grid, monitor);
}

PropagatorTrajectory propagate_free(const Dynamics& dyn, const TimeGrid& grid) {
    return propagate(dyn, CurrentProfile::none(grid, static_cast<int>(dyn.couplings.size())), grid);
}

PropagatorTrajectory interaction_factor(const PropagatorTrajectory& full, const PropagatorTrajectory& free) {
    require_same_grid(full.grid, free.grid, "interaction_factor");
    if (full.U.size() != free.U.size() || full.U.front().rows() != free.U.front().rows())
        throw PreconditionError("interaction_factor: trajectory shape mismatch");
    PropagatorTrajectory out;
    out.grid = full.grid;
    out.unitary_hint = full.unitary_hint && free.unitary_hint;
    out.U.reserve(full.U.size());
    for (size_t k = 0; k < full.U.size(); ++k) out.U.push_back(free.U[k].adjoint() * full.U[k]);
    return out;
}

HeisenbergTrajectory heisenberg_trajectory(const PropagatorTrajectory& prop, const Mat& Qs, const std::string& source) {
    HeisenbergTrajectory h;
    h.grid = prop.grid;
    h.source = source;
    h.ops.reserve(prop.U.size());
    for (const auto& U : prop.U) h.ops.push_back(U.adjoint() * Qs * U);
    return h;
}

SchwingerPair schwinger_propagators(const Signal& eta_minus, const Signal& eta_plus, const CurrentProfile& j,
                                    const Dynamics& dyn, const TimeGrid& grid) {
    require_same_grid(grid, eta_minus.grid, "schwinger_propagators");
    require_same_grid(grid, eta_plus.grid, "schwinger_propagators");
    CurrentProfile jp = j, jm = j;
    jp.add_signal(eta_plus, 0, dyn.hbar);
    jm.add_signal(eta_minus.conj(), 0, dyn.hbar);
    return {propagate(dyn, jm, grid), propagate(dyn, jp, grid)};
}

double unitarity_defect(const PropagatorTrajectory& p) {
    double worst = 0;
    for (const auto& U : p.U) {
        Mat d = U.adjoint() * U - Mat::Identity(U.rows(), U.cols());
        worst = std::max(worst, max_abs(d));
    }
    return worst;
}

}  // namespace tnresp
