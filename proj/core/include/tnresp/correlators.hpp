#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "tnresp/evolution.hpp"
#include "tnresp/tensor.hpp"

namespace tnresp {

struct OrderingSpec {
    std::vector<int> minus_legs;
    std::vector<int> plus_legs;

    void validate(int rank) const;
};

inline constexpr int kDefaultRankCap = 3;

// Family index of a leg label: neutral and F map to 0, Fdag to 1.
inline int family_index(Label l) { return l == Label::fdag ? 1 : 0; }

// Raw moments Tr[rho A_l1(x1) ... A_lr(xr)] over all grid tuples for a family of
// Heisenberg trajectories. Full tensors are built lazily per label sequence.
class MomentTable {
public:
    MomentTable(std::vector<HeisenbergTrajectory> family, const StateDensity& rho, int rank_cap = kDefaultRankCap);

    int extent() const { return n_; }
    int families() const { return static_cast<int>(family_.size()); }
    const TimeGrid& grid() const { return family_.front().grid; }
    const HeisenbergTrajectory& trajectory(int f) const { return family_[f]; }
    const StateDensity& state() const { return rho_; }
    int rank_cap() const { return rank_cap_; }

    cplx raw(std::span<const int> labels, std::span<const int> times) const;
    const std::vector<cplx>& full(const std::vector<int>& labels) const;

private:
    std::vector<cplx> build(const std::vector<int>& labels) const;

    std::vector<HeisenbergTrajectory> family_;
    StateDensity rho_;
    int n_ = 0;
    int d_ = 0;
    int rank_cap_ = kDefaultRankCap;
    mutable std::mutex mu_;
    mutable std::map<std::vector<int>, std::unique_ptr<std::vector<cplx>>> cache_;
};

// Double-time-ordered average Tr[rho T_-(minus legs) T_+(plus legs)] by direct matrix
// products. T_- factors stand left, later times to the right; T_+ later times to the
// left. Equal times inside one side are averaged over their orders.
cplx ordered_average(const std::vector<const HeisenbergTrajectory*>& legs, const OrderingSpec& ordering,
                     std::span<const int> times, const StateDensity& rho);
cplx ordered_average(const HeisenbergTrajectory& traj, const OrderingSpec& ordering, std::span<const int> times,
                     const StateDensity& rho);

// Ordered tensor for legs with the given side and label metadata, evaluated through the
// moment table.
CorrelationTensor ordered_tensor(const MomentTable& table, const std::vector<LegMeta>& legs);
// As above with explicit family members per leg instead of the label mapping.
CorrelationTensor ordered_tensor(const MomentTable& table, const std::vector<LegMeta>& legs,
                                 const std::vector<int>& families);

// Legs 0..m-1 on the T_- side, m..m+n-1 on the T_+ side.
CorrelationTensor correlation_tensor(const MomentTable& table, int n_minus, int n_plus);
CorrelationTensor correlation_tensor(const HeisenbergTrajectory& traj, int n_minus, int n_plus,
                                     const StateDensity& rho, int rank_cap = kDefaultRankCap);

Signal mean_signal(const HeisenbergTrajectory& traj, const StateDensity& rho);

inline constexpr double kComplexNormCap = 5.0;

// Phi(eta_-, eta_+; j) = Tr[rho W_-^dag(T) W_+(T)] from the Schwinger propagator pair.
cplx characteristic_functional(const Signal& eta_minus, const Signal& eta_plus, const CurrentProfile& j,
                               const Dynamics& dyn, const StateDensity& rho);

// Same functional from the ordered exponentials of a (source-carrying) Heisenberg
// trajectory: Tr[rho prod_asc e^{i dt eta_- Q(t_k)} prod_desc e^{-i dt eta_+ Q(t_k)}].
cplx characteristic_functional_heisenberg(const Signal& eta_minus, const Signal& eta_plus,
                                          const HeisenbergTrajectory& traj, const StateDensity& rho);

// F(eta; j) = Tr[rho exp(-i sum dt (eta_+ - eta_-) Q_j)], no ordering. Only for models whose
// coupling commutes with H0 (checked against `dyn`).
cplx commuting_functional(const Signal& eta_minus, const Signal& eta_plus, const HeisenbergTrajectory& traj_j,
                          const Dynamics& dyn, const StateDensity& rho);

void check_norm_cap(const Signal& hbar_eta, const char* what);

}  // namespace tnresp
