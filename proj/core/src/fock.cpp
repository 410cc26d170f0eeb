#include "tnresp/fock.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace tnresp {

FockSpace::FockSpace(std::vector<int> cut, double h) : cutoffs(std::move(cut)), hbar(h) {
    if (cutoffs.empty()) throw PreconditionError("FockSpace needs at least one mode");
    for (int c : cutoffs)
        if (c < 2) throw PreconditionError("Fock cutoff must be >= 2, got " + std::to_string(c));
    if (!(hbar > 0)) throw PreconditionError("hbar must be positive");
}

int FockSpace::total_dim() const {
    int d = 1;
    for (int c : cutoffs) d *= c;
    return d;
}

int FockSpace::level(int flat, int mode) const {
    // mode 0 is the most significant factor of the Kronecker product
    int stride = 1;
    for (int m = modes() - 1; m > mode; --m) stride *= cutoffs[m];
    return (flat / stride) % cutoffs[mode];
}

void OperatorMatrix::check() const {
    if (entries.rows() != entries.cols()) throw NumericalError("operator matrix is not square");
    if (!hermitian_hint) return;
    double scale = max_abs(entries);
    double dev = max_abs(Mat(entries - entries.adjoint()));
    if (dev > 1e-12 * std::max(scale, 1e-300))
        throw NumericalError("hermitian_hint set but ||A - A^dag|| = " + std::to_string(dev));
}

StateDensity::StateDensity(Mat m) : entries(std::move(m)) {
    if (entries.rows() != entries.cols()) throw PreconditionError("density matrix is not square");
    if (max_abs(Mat(entries - entries.adjoint())) > 1e-12)
        throw PreconditionError("density matrix is not Hermitian");
    if (std::abs(entries.trace() - 1.0) > 1e-12)
        throw PreconditionError("density matrix trace differs from 1");
    Eigen::SelfAdjointEigenSolver<Mat> es(entries, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
        throw PreconditionError("density matrix has a negative eigenvalue");
}

double ModelSpec::omega_of(int mode) const {
    if (omega.empty()) throw PreconditionError("model has no frequencies");
    double w = mode < static_cast<int>(omega.size()) ? omega[mode] : omega.back();
    if (!(w > 0)) throw PreconditionError("mode frequency must be positive");
    return w;
}

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::harmonic: return "harmonic";
        case ModelKind::kerr: return "kerr";
        case ModelKind::driven_pair: return "driven_pair";
        case ModelKind::custom: return "custom";
    }
    return "?";
}

const char* to_string(CouplingKind k) {
    switch (k) {
        case CouplingKind::quadrature: return "quadrature";
        case CouplingKind::number: return "number";
        case CouplingKind::custom: return "custom";
    }
    return "?";
}

namespace {

Mat embed(const FockSpace& space, int mode, const Mat& local) {
    Mat out = Mat::Identity(1, 1);
    for (int m = 0; m < space.modes(); ++m) {
        const Mat f = (m == mode) ? local : Mat::Identity(space.cutoffs[m], space.cutoffs[m]);
        Mat k(out.rows() * f.rows(), out.cols() * f.cols());
        for (int i = 0; i < out.rows(); ++i)
            for (int j = 0; j < out.cols(); ++j)
                k.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) = out(i, j) * f;
        out = std::move(k);
    }
    return out;
}

int required_modes(const ModelSpec& model) {
    return model.kind == ModelKind::driven_pair ? 2 : 1;
}

void check_model(const ModelSpec& model, const FockSpace& space) {
    if (model.kind != ModelKind::custom && space.modes() < required_modes(model))
        throw PreconditionError(std::string("model ") + to_string(model.kind) + " needs " +
                                std::to_string(required_modes(model)) + " modes");
    if (model.coupling_mode < 0 || model.coupling_mode >= space.modes())
        throw PreconditionError("coupling_mode out of range");
    if (!(model.mass > 0)) throw PreconditionError("mass must be positive");
}

}  // namespace

std::pair<OperatorMatrix, OperatorMatrix> build_ladder(const FockSpace& space, int mode) {
    if (mode < 0 || mode >= space.modes()) throw PreconditionError("mode out of range");
    const int n = space.cutoffs[mode];
    Mat a = Mat::Zero(n, n);
    for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    Mat full = embed(space, mode, a);
    Mat dag = full.adjoint();
    return {OperatorMatrix(std::move(full), false), OperatorMatrix(std::move(dag), false)};
}

OperatorMatrix build_hamiltonian(const ModelSpec& model, const FockSpace& space) {
    check_model(model, space);
    const int d = space.total_dim();
    const double h = space.hbar;
    if (model.kind == ModelKind::custom) {
        if (!model.custom_hamiltonian) throw PreconditionError("custom model without a Hamiltonian matrix");
        if (model.custom_hamiltonian->rows() != d || model.custom_hamiltonian->cols() != d)
            throw PreconditionError("custom Hamiltonian has wrong dimension");
        OperatorMatrix op(*model.custom_hamiltonian, true);
        op.check();
        return op;
    }
    Mat H = Mat::Zero(d, d);
    // Diagonal part: sum over modes of hbar*omega*n + hbar*chi*n^2; evaluated per basis
    // state so the spectrum is exact.
    for (int s = 0; s < d; ++s) {
        double e = 0;
        for (int m = 0; m < space.modes(); ++m) {
            const double n = space.level(s, m);
            if (model.kind == ModelKind::driven_pair && m > 1) continue;
            if (model.kind != ModelKind::driven_pair && m > 0) continue;
            e += h * model.omega_of(m) * n + h * model.chi * n * n;
        }
        H(s, s) = e;
    }
    if (model.kind == ModelKind::driven_pair) {
        auto [a, ad] = build_ladder(space, 0);
        auto [b, bd] = build_ladder(space, 1);
        H += h * model.g * (ad.entries * b.entries + bd.entries * a.entries);
    }
    OperatorMatrix op(std::move(H), true);
    op.check();
    return op;
}

OperatorMatrix build_coupling_operator(const ModelSpec& model, const FockSpace& space) {
    check_model(model, space);
    const int d = space.total_dim();
    switch (model.coupling) {
        case CouplingKind::quadrature: {
            auto [a, ad] = build_ladder(space, model.coupling_mode);
            const double scale = std::sqrt(space.hbar / (2.0 * model.mass * model.omega_of(model.coupling_mode)));
            Mat q = scale * (a.entries + ad.entries);
            return OperatorMatrix(std::move(q), true);
        }
        case CouplingKind::number: {
            Mat q = Mat::Zero(d, d);
            for (int s = 0; s < d; ++s) q(s, s) = space.level(s, model.coupling_mode);
            return OperatorMatrix(std::move(q), true);
        }
        case CouplingKind::custom: {
            if (!model.custom_coupling) throw PreconditionError("custom coupling without a matrix");
            if (model.custom_coupling->rows() != d) throw PreconditionError("custom coupling has wrong dimension");
            OperatorMatrix op(*model.custom_coupling, true);
            op.check();
            return op;
        }
    }
    throw PreconditionError("invalid coupling kind");
}

OperatorMatrix build_charged_field(const ModelSpec& model, const FockSpace& space) {
    check_model(model, space);
    return build_ladder(space, model.coupling_mode).first;
}

double leak_metric(const FockSpace& space, const StateDensity& rho) {
    double worst = 0;
    for (int m = 0; m < space.modes(); ++m) {
        double p = 0;
        for (int s = 0; s < rho.dim(); ++s)
            if (space.level(s, m) >= space.cutoffs[m] - 2) p += rho.entries(s, s).real();
        worst = std::max(worst, p);
    }
    return worst;
}

double top_level_population(const FockSpace& space, const Mat& rho) {
    double worst = 0;
    for (int m = 0; m < space.modes(); ++m) {
        double p = 0;
        for (int s = 0; s < rho.rows(); ++s)
            if (space.level(s, m) == space.cutoffs[m] - 1) p += rho(s, s).real();
        worst = std::max(worst, p);
    }
    return worst;
}

namespace {

void check_leak(const FockSpace& space, const StateDensity& rho, double tol, const std::string& what) {
    const double leak = leak_metric(space, rho);
    if (leak > tol) {
        std::ostringstream os;
        os << "truncation leak: " << what << " puts population " << leak
           << " on the two highest Fock levels (limit " << tol << "); raise the cutoff";
        throw PreconditionError(os.str());
    }
}

Mat kron_all(const std::vector<Mat>& factors) {
    Mat out = Mat::Identity(1, 1);
    for (const Mat& f : factors) {
        Mat k(out.rows() * f.rows(), out.cols() * f.cols());
        for (int i = 0; i < out.rows(); ++i)
            for (int j = 0; j < out.cols(); ++j)
                k.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) = out(i, j) * f;
        out = std::move(k);
    }
    return out;
}

}  // namespace

StateDensity coherent_state(const FockSpace& space, const std::vector<cplx>& alpha, double leak_tol) {
    if (static_cast<int>(alpha.size()) != space.modes())
        throw PreconditionError("coherent_state needs one amplitude per mode");
    std::vector<Mat> factors;
    for (int m = 0; m < space.modes(); ++m) {
        const int n = space.cutoffs[m];
        Vec psi(n);
        cplx c = 1.0;
        for (int k = 0; k < n; ++k) {
            if (k > 0) c *= alpha[m] / std::sqrt(static_cast<double>(k));
            psi(k) = c;
        }
        psi /= psi.norm();
        factors.push_back(psi * psi.adjoint());
    }
    Mat rho = kron_all(factors);
    rho = 0.5 * (rho + rho.adjoint().eval());
    rho /= rho.trace().real();
    StateDensity st(std::move(rho));
    check_leak(space, st, leak_tol, "coherent state");
    return st;
}

StateDensity thermal_state(const FockSpace& space, const std::vector<double>& nbar, double leak_tol) {
    if (static_cast<int>(nbar.size()) != space.modes())
        throw PreconditionError("thermal_state needs one occupation per mode");
    std::vector<Mat> factors;
    for (int m = 0; m < space.modes(); ++m) {
        if (nbar[m] < 0) throw PreconditionError("thermal occupation must be >= 0");
        const int n = space.cutoffs[m];
        Mat r = Mat::Zero(n, n);
        if (nbar[m] == 0) {
            r(0, 0) = 1;
        } else {
            const double q = nbar[m] / (1.0 + nbar[m]);
            double w = 1.0;
            for (int k = 0; k < n; ++k, w *= q) r(k, k) = w;
        }
        r /= r.trace().real();
        factors.push_back(r);
    }
    StateDensity st(kron_all(factors));
    check_leak(space, st, leak_tol, "thermal state");
    return st;
}

StateDensity vacuum_state(const FockSpace& space) {
    Mat rho = Mat::Zero(space.total_dim(), space.total_dim());
    rho(0, 0) = 1;
    return StateDensity(std::move(rho));
}

cplx expectation(const StateDensity& rho, const Mat& op) {
    if (op.rows() != rho.dim() || op.cols() != rho.dim()) throw PreconditionError("expectation: dimension mismatch");
    return (rho.entries * op).trace();
}

Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

}  // namespace tnresp
