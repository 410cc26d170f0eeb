#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "tnresp/common.hpp"

namespace tnresp {

struct FockSpace {
    std::vector<int> cutoffs;  // levels 0..N-1 per mode
    double hbar = 1.0;

    FockSpace() = default;
    FockSpace(std::vector<int> cut, double h = 1.0);
    static FockSpace single(int cutoff, double h = 1.0) { return FockSpace({cutoff}, h); }

    int modes() const { return static_cast<int>(cutoffs.size()); }
    int total_dim() const;
    // Fock level of `mode` in the basis state with flat index `flat`.
    int level(int flat, int mode) const;
};

struct OperatorMatrix {
    Mat entries;
    bool hermitian_hint = false;

    OperatorMatrix() = default;
    OperatorMatrix(Mat m, bool herm) : entries(std::move(m)), hermitian_hint(herm) {}
    int dim() const { return static_cast<int>(entries.rows()); }
    // Throws NumericalError when the hint is set but the matrix is not Hermitian.
    void check() const;
};

struct StateDensity {
    Mat entries;

    StateDensity() = default;
    explicit StateDensity(Mat m);
    int dim() const { return static_cast<int>(entries.rows()); }
};

enum class ModelKind { harmonic, kerr, driven_pair, custom };
enum class CouplingKind { quadrature, number, custom };

struct ModelSpec {
    ModelKind kind = ModelKind::harmonic;
    std::vector<double> omega{1.0};  // per mode
    double chi = 0.0;
    double g = 0.0;
    double mass = 1.0;
    CouplingKind coupling = CouplingKind::quadrature;
    int coupling_mode = 0;
    std::optional<Mat> custom_hamiltonian;
    std::optional<Mat> custom_coupling;

    double omega_of(int mode) const;
};

const char* to_string(ModelKind k);
const char* to_string(CouplingKind k);

std::pair<OperatorMatrix, OperatorMatrix> build_ladder(const FockSpace& space, int mode);
OperatorMatrix build_hamiltonian(const ModelSpec& model, const FockSpace& space);
OperatorMatrix build_coupling_operator(const ModelSpec& model, const FockSpace& space);
// Annihilator of the coupled mode: the charged field F_S.
OperatorMatrix build_charged_field(const ModelSpec& model, const FockSpace& space);

// Tr(rho P) with P projecting on the two highest levels of any mode (max over modes).
double leak_metric(const FockSpace& space, const StateDensity& rho);
// Largest population of the top level of any mode.
double top_level_population(const FockSpace& space, const Mat& rho);

inline constexpr double kLeakTolerance = 1e-6;
inline constexpr double kTopPopulationLimit = 1e-4;

StateDensity coherent_state(const FockSpace& space, const std::vector<cplx>& alpha,
                            double leak_tol = kLeakTolerance);
StateDensity thermal_state(const FockSpace& space, const std::vector<double>& nbar,
                           double leak_tol = kLeakTolerance);
StateDensity vacuum_state(const FockSpace& space);

cplx expectation(const StateDensity& rho, const Mat& op);
Mat commutator(const Mat& a, const Mat& b);

}  // namespace tnresp
