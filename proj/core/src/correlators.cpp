#include "tnresp/correlators.hpp"

#include <algorithm>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace tnresp {

void OrderingSpec::validate(int rank) const {
    std::vector<int> seen(rank, 0);
    for (int l : minus_legs) {
        if (l < 0 || l >= rank) throw PreconditionError("ordering leg out of range");
        ++seen[l];
    }
    for (int l : plus_legs) {
        if (l < 0 || l >= rank) throw PreconditionError("ordering leg out of range");
        ++seen[l];
    }
    for (int s : seen)
        if (s != 1) throw PreconditionError("ordering sides must partition the legs");
}

MomentTable::MomentTable(std::vector<HeisenbergTrajectory> family, const StateDensity& rho, int rank_cap)
    : family_(std::move(family)), rho_(rho), rank_cap_(rank_cap) {
    if (family_.empty()) throw PreconditionError("moment table needs at least one trajectory");
    n_ = family_.front().size();
    d_ = static_cast<int>(family_.front().ops.front().rows());
    for (const auto& f : family_) {
        if (f.size() != n_) throw PreconditionError("trajectory length mismatch");
        require_same_grid(f.grid, family_.front().grid, "moment table");
    }
    if (rho_.dim() != d_) throw PreconditionError("state dimension mismatch");
    if (rank_cap_ < 1 || rank_cap_ > 4) throw PreconditionError("rank_cap must be in 1..4");
}

namespace {

// Row-major flatten of each matrix in `ms` into rows of an (count x D^2) matrix, optionally
// transposed per element so that Tr[X B] = <vec X, vec B^T>.
Mat flatten_rows(const std::vector<Mat>& ms, bool transpose_each) {
    const int D = static_cast<int>(ms.front().rows());
    Mat out(ms.size(), D * D);
    for (size_t i = 0; i < ms.size(); ++i)
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) out(i, a * D + b) = transpose_each ? ms[i](b, a) : ms[i](a, b);
    return out;
}

}  // namespace

std::vector<cplx> MomentTable::build(const std::vector<int>& labels) const {
    const int r = static_cast<int>(labels.size());
    if (r < 1) throw PreconditionError("empty label sequence");
    if (r > rank_cap_) throw PreconditionError("rank cap exceeded: rank " + std::to_string(r) + " > " + std::to_string(rank_cap_));
    for (int l : labels)
        if (l < 0 || l >= families()) throw PreconditionError("label outside the operator family");
    const int N = n_;
    const Mat& rho = rho_.entries;
    auto ops = [&](int l) -> const std::vector<Mat>& { return family_[l].ops; };

    // left products rho A(x1) ... A(x_{r-1}) over all leading tuples
    std::vector<Mat> left;
    left.reserve(N);
    for (int x = 0; x < N; ++x) left.push_back(rho * ops(labels[0])[x]);
    for (int p = 1; p + 1 < r; ++p) {
        std::vector<Mat> next;
        next.reserve(left.size() * N);
        for (const auto& L : left)
            for (int y = 0; y < N; ++y) next.push_back(L * ops(labels[p])[y]);
        left = std::move(next);
    }
    std::vector<cplx> out;
    if (r == 1) {
        out.resize(N);
        for (int x = 0; x < N; ++x) out[x] = left[x].trace();
        return out;
    }
    Mat A = flatten_rows(left, false);
    Mat B = flatten_rows(ops(labels[r - 1]), true);
    Mat R = A * B.transpose();  // (N^{r-1}) x N
    out.resize(static_cast<size_t>(R.rows()) * N);
    for (Eigen::Index i = 0; i < R.rows(); ++i)
        for (int z = 0; z < N; ++z) out[static_cast<size_t>(i) * N + z] = R(i, z);
    return out;
}

const std::vector<cplx>& MomentTable::full(const std::vector<int>& labels) const {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(labels);
        if (it != cache_.end()) return *it->second;
    }
    auto built = std::make_unique<std::vector<cplx>>(build(labels));
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = cache_.emplace(labels, std::move(built));
    return *it->second;
}

cplx MomentTable::raw(std::span<const int> labels, std::span<const int> times) const {
    std::vector<int> l(labels.begin(), labels.end());
    const auto& t = full(l);
    size_t off = 0;
    for (int x : times) off = off * n_ + x;
    return t[off];
}

namespace {

// Operator sequence for one tuple: legs in product order, with tie groups expanded into all
// their distinct orders. Calls f(sequence, weight) for each term.
template <class F>
void expand_orders(const std::vector<int>& minus, const std::vector<int>& plus, std::span<const int> times,
                   const std::vector<int>& label, F&& f) {
    std::vector<int> seq;
    seq.reserve(minus.size() + plus.size());
    std::vector<int> m = minus, p = plus;
    std::stable_sort(m.begin(), m.end(), [&](int a, int b) { return times[a] < times[b]; });
    std::stable_sort(p.begin(), p.end(), [&](int a, int b) { return times[a] > times[b]; });
    seq.insert(seq.end(), m.begin(), m.end());
    seq.insert(seq.end(), p.begin(), p.end());

    // tie groups: runs of equal time inside one side whose labels are not all equal
    struct Group { size_t begin, end; };
    std::vector<Group> groups;
    auto scan = [&](size_t b, size_t e) {
        size_t i = b;
        while (i < e) {
            size_t k = i + 1;
            while (k < e && times[seq[k]] == times[seq[i]]) ++k;
            bool mixed = false;
            for (size_t q = i + 1; q < k; ++q) mixed |= label[seq[q]] != label[seq[i]];
            if (mixed) groups.push_back({i, k});
            i = k;
        }
    };
    scan(0, m.size());
    scan(m.size(), seq.size());
    if (groups.empty()) {
        f(seq, 1.0);
        return;
    }
    // each group: average over all orders (permutations of its legs)
    std::vector<std::vector<std::vector<int>>> options(groups.size());
    double weight = 1.0;
    for (size_t g = 0; g < groups.size(); ++g) {
        std::vector<int> members(seq.begin() + groups[g].begin, seq.begin() + groups[g].end);
        std::sort(members.begin(), members.end());
        do options[g].push_back(members);
        while (std::next_permutation(members.begin(), members.end()));
        weight /= static_cast<double>(options[g].size());
    }
    std::vector<size_t> pick(groups.size(), 0);
    while (true) {
        std::vector<int> s = seq;
        for (size_t g = 0; g < groups.size(); ++g)
            std::copy(options[g][pick[g]].begin(), options[g][pick[g]].end(), s.begin() + groups[g].begin);
        f(s, weight);
        size_t g = 0;
        while (g < groups.size() && ++pick[g] == options[g].size()) pick[g++] = 0;
        if (g == groups.size()) break;
    }
}

}  // namespace

cplx ordered_average(const std::vector<const HeisenbergTrajectory*>& legs, const OrderingSpec& ordering,
                     std::span<const int> times, const StateDensity& rho) {
    const int r = static_cast<int>(legs.size());
    ordering.validate(r);
    if (static_cast<int>(times.size()) != r) throw PreconditionError("times tuple size differs from rank");
    // labels: identical trajectory pointers are the same operator
    std::vector<int> label(r);
    for (int i = 0; i < r; ++i) {
        label[i] = i;
        for (int k = 0; k < i; ++k)
            if (legs[k] == legs[i]) { label[i] = label[k]; break; }
        if (times[i] < 0 || times[i] >= legs[i]->size()) throw PreconditionError("time index off grid");
    }
    cplx acc = 0;
    expand_orders(ordering.minus_legs, ordering.plus_legs, times, label, [&](const std::vector<int>& seq, double w) {
        Mat prod = rho.entries;
        for (int leg : seq) prod = prod * (*legs[leg])[times[leg]];
        acc += w * prod.trace();
    });
    return acc;
}

cplx ordered_average(const HeisenbergTrajectory& traj, const OrderingSpec& ordering, std::span<const int> times,
                     const StateDensity& rho) {
    std::vector<const HeisenbergTrajectory*> legs(times.size(), &traj);
    return ordered_average(legs, ordering, times, rho);
}

CorrelationTensor ordered_tensor(const MomentTable& table, const std::vector<LegMeta>& legs) {
    std::vector<int> fam(legs.size());
    for (size_t i = 0; i < legs.size(); ++i) fam[i] = family_index(legs[i].label);
    return ordered_tensor(table, legs, fam);
}

CorrelationTensor ordered_tensor(const MomentTable& table, const std::vector<LegMeta>& legs,
                                 const std::vector<int>& families) {
    const int r = static_cast<int>(legs.size());
    if (r > table.rank_cap()) throw PreconditionError("rank cap exceeded: rank " + std::to_string(r));
    if (static_cast<int>(families.size()) != r) throw PreconditionError("family list size mismatch");
    CorrelationTensor out(table.grid(), legs);
    if (r == 0) return out;
    std::vector<int> minus, plus;
    bool uniform = true;
    for (int i = 0; i < r; ++i) {
        (legs[i].side == Side::minus ? minus : plus).push_back(i);
        if (families[i] < 0 || families[i] >= table.families()) throw PreconditionError("leg family not in moment table");
        uniform &= families[i] == families[0];
    }
    const int N = table.extent();
    std::vector<int> idx;
    if (uniform) {
        // one operator family: ties are products of identical factors, only the sort matters
        const std::vector<int> labs(r, families[0]);
        const auto& raw = table.full(labs);
        const int nm = static_cast<int>(minus.size());
        int seq[4];
        for (size_t f = 0; f < out.data.size(); ++f) {
            out.unravel(f, idx);
            for (int q = 0; q < nm; ++q) seq[q] = idx[minus[q]];
            for (size_t q = 0; q < plus.size(); ++q) seq[nm + q] = idx[plus[q]];
            std::sort(seq, seq + nm);
            std::sort(seq + nm, seq + r, std::greater<int>());
            size_t off = 0;
            for (int q = 0; q < r; ++q) off = off * N + seq[q];
            out.data[f] = raw[off];
        }
        return out;
    }
    std::vector<int> seq_labels(r);
    for (size_t f = 0; f < out.data.size(); ++f) {
        out.unravel(f, idx);
        cplx acc = 0;
        expand_orders(minus, plus, std::span<const int>(idx), families, [&](const std::vector<int>& seq, double w) {
            size_t off = 0;
            for (int q = 0; q < r; ++q) {
                seq_labels[q] = families[seq[q]];
                off = off * N + idx[seq[q]];
            }
            acc += w * table.full(seq_labels)[off];
        });
        out.data[f] = acc;
    }
    return out;
}

CorrelationTensor correlation_tensor(const MomentTable& table, int n_minus, int n_plus) {
    std::vector<LegMeta> legs;
    for (int i = 0; i < n_minus; ++i) legs.push_back({Side::minus, Split::none, Label::neutral, table.trajectory(0).source});
    for (int i = 0; i < n_plus; ++i) legs.push_back({Side::plus, Split::none, Label::neutral, table.trajectory(0).source});
    return ordered_tensor(table, legs);
}

CorrelationTensor correlation_tensor(const HeisenbergTrajectory& traj, int n_minus, int n_plus,
                                     const StateDensity& rho, int rank_cap) {
    if (n_minus + n_plus > rank_cap) throw PreconditionError("rank cap exceeded");
    MomentTable table({traj}, rho, rank_cap);
    return correlation_tensor(table, n_minus, n_plus);
}

Signal mean_signal(const HeisenbergTrajectory& traj, const StateDensity& rho) {
    Vec v(traj.size());
    for (int k = 0; k < traj.size(); ++k) v(k) = (rho.entries * traj[k]).trace();
    return Signal(traj.grid, v, false);
}

void check_norm_cap(const Signal& hbar_eta, const char* what) {
    const double n = max_abs(hbar_eta.values) * hbar_eta.grid.span();
    if (n > kComplexNormCap)
        throw PreconditionError(std::string(what) + ": |hbar eta|_max * T_window = " + std::to_string(n) +
                                " exceeds the cap " + std::to_string(kComplexNormCap));
}

cplx characteristic_functional(const Signal& eta_minus, const Signal& eta_plus, const CurrentProfile& j,
                               const Dynamics& dyn, const StateDensity& rho) {
    if (rho.dim() != dyn.dim()) throw PreconditionError("characteristic_functional: state dimension mismatch");
    check_norm_cap(dyn.hbar * eta_minus, "characteristic_functional");
    check_norm_cap(dyn.hbar * eta_plus, "characteristic_functional");
    auto w = schwinger_propagators(eta_minus, eta_plus, j, dyn, eta_plus.grid);
    return (rho.entries * w.minus.final().adjoint() * w.plus.final()).trace();
}

namespace {

struct EigCache {
    std::vector<Eigen::VectorXd> vals;
    std::vector<Mat> vecs;
};

EigCache eig_trajectory(const HeisenbergTrajectory& traj) {
    EigCache c;
    for (const auto& Q : traj.ops) {
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Q + Q.adjoint()));
        c.vals.push_back(es.eigenvalues());
        c.vecs.push_back(es.eigenvectors());
    }
    return c;
}

Mat exp_from(const EigCache& c, int k, cplx factor) {
    Vec d(c.vals[k].size());
    for (int i = 0; i < d.size(); ++i) d(i) = std::exp(factor * c.vals[k](i));
    return c.vecs[k] * d.asDiagonal() * c.vecs[k].adjoint();
}

}  // namespace

cplx characteristic_functional_heisenberg(const Signal& eta_minus, const Signal& eta_plus,
                                          const HeisenbergTrajectory& traj, const StateDensity& rho) {
    require_same_grid(eta_minus.grid, traj.grid, "characteristic_functional_heisenberg");
    require_same_grid(eta_plus.grid, traj.grid, "characteristic_functional_heisenberg");
    const EigCache c = eig_trajectory(traj);
    const int N = traj.size();
    const double dt = traj.grid.dt;
    const int D = static_cast<int>(traj[0].rows());
    if (rho.dim() != D) throw PreconditionError("characteristic_functional_heisenberg: state dimension mismatch");
    Mat minus = Mat::Identity(D, D), plus = Mat::Identity(D, D);
    for (int k = 0; k < N; ++k) {
        if (eta_minus[k] != 0.0) minus = minus * exp_from(c, k, I_UNIT * dt * eta_minus[k]);
        if (eta_plus[k] != 0.0) plus = exp_from(c, k, -I_UNIT * dt * eta_plus[k]) * plus;
    }
    return (rho.entries * minus * plus).trace();
}

cplx commuting_functional(const Signal& eta_minus, const Signal& eta_plus, const HeisenbergTrajectory& traj_j,
                          const Dynamics& dyn, const StateDensity& rho) {
    if (dyn.couplings.size() != 1) throw PreconditionError("commuting_functional needs one coupling operator");
    const double comm = max_abs(commutator(dyn.couplings[0], dyn.H0));
    if (comm > 1e-12)
        throw PreconditionError("commuting_functional: coupling does not commute with H0 (|[Q,H]| = " +
                                std::to_string(comm) + ")");
    require_same_grid(eta_minus.grid, traj_j.grid, "commuting_functional");
    const int D = static_cast<int>(traj_j[0].rows());
    if (rho.dim() != D) throw PreconditionError("commuting_functional: state dimension mismatch");
    Mat G = Mat::Zero(D, D);
    for (int k = 0; k < traj_j.size(); ++k) G += (traj_j.grid.dt * (eta_plus[k] - eta_minus[k])) * traj_j[k];
    Mat E = (-I_UNIT * G).exp();
    return (rho.entries * E).trace();
}

}  // namespace tnresp
