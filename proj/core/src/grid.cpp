#include "tnresp/grid.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include <unsupported/Eigen/FFT>

namespace tnresp {

TimeGrid::TimeGrid(double t0_, double dt_, int n, int pad) : t0(t0_), dt(dt_), count(n), pad_factor(pad) {
    if (!(dt > 0)) throw PreconditionError("TimeGrid: dt must be positive");
    if (count < 8) throw PreconditionError("TimeGrid: need at least 8 points");
    if (pad_factor < 1) throw PreconditionError("TimeGrid: pad_factor must be >= 1");
}

int TimeGrid::index_of(double t) const {
    long k = std::lround((t - t0) / dt);
    if (k < 0) k = 0;
    if (k >= count) k = count - 1;
    return static_cast<int>(k);
}

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
    if (!(a == b)) throw PreconditionError(std::string("grid mismatch in ") + what);
}

Signal::Signal(TimeGrid g, Vec v, bool real) : grid(g), values(std::move(v)), real_hint(real) {
    if (values.size() != grid.count) throw PreconditionError("Signal length differs from grid count");
    if (real_hint && values.size()) {
        const double scale = max_abs(values);
        if (values.imag().cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw PreconditionError("Signal flagged real has an imaginary part");
    }
}

Signal Signal::sample(const TimeGrid& g, const std::function<cplx(double)>& f, bool real) {
    Vec v(g.count);
    for (int k = 0; k < g.count; ++k) v(k) = f(g.time(k));
    if (real) v = v.real().cast<cplx>();
    return Signal(g, std::move(v), real);
}

Signal operator+(const Signal& a, const Signal& b) {
    require_same_grid(a.grid, b.grid, "signal sum");
    return Signal(a.grid, a.values + b.values, a.real_hint && b.real_hint);
}

Signal operator-(const Signal& a, const Signal& b) {
    require_same_grid(a.grid, b.grid, "signal difference");
    return Signal(a.grid, a.values - b.values, a.real_hint && b.real_hint);
}

Signal operator*(cplx s, const Signal& a) {
    return Signal(a.grid, s * a.values, a.real_hint && s.imag() == 0.0);
}

Signal SplitKernel::apply(const Signal& s) const {
    require_same_grid(grid, s.grid, "split kernel action");
    return Signal(grid, matrix * s.values, false);
}

namespace {

// Weight of DFT bin k (of L) in the positive-frequency mask. Bin k carries frequency
// 2 pi k / (L dt) for k < L/2 and the negative alias above.
double plus_mask(int k, int L, bool strict) {
    if (k == 0) return strict ? 0.0 : 0.5;
    if (2 * k == L) return strict ? 0.0 : 0.5;
    return 2 * k < L ? 1.0 : 0.0;
}

// Lag coefficients c_+(d), d = 0..N-1, of the padded inverse DFT of the mask.
std::vector<cplx> plus_lags(int N, int L, bool strict) {
    std::vector<cplx> c(N);
    for (int d = 0; d < N; ++d) {
        long double re = 0, im = 0;
        for (int k = 0; k < L; ++k) {
            const double w = plus_mask(k, L, strict);
            if (w == 0) continue;
            // reduce the phase index exactly before converting to an angle
            const long kd = (static_cast<long>(k) * d) % L;
            const long double ang = -2.0L * std::numbers::pi_v<long double> * kd / L;
            re += w * std::cos(ang);
            im += w * std::sin(ang);
        }
        c[d] = cplx(static_cast<double>(re / L), static_cast<double>(im / L));
    }
    return c;
}

using KernelKey = std::tuple<int, int, bool>;

const Mat& cached_plus(int N, int pad, bool strict) {
    static std::mutex mu;
    static std::map<KernelKey, Mat> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = KernelKey{N, pad, strict};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    const int L = N * pad;
    const auto c = plus_lags(N, L, strict);
    Mat P(N, N);
    if (!strict) {
        // The half/half mask makes c_+(0) = 1/2 and c_+(d) purely imaginary and odd;
        // impose that exactly so the complementary kernel is the transpose.
        for (int t = 0; t < N; ++t) {
            P(t, t) = 0.5;
            for (int s = 0; s < t; ++s) {
                const cplx v(0.0, c[t - s].imag());
                P(t, s) = v;
                P(s, t) = -v;
            }
        }
    } else {
        for (int t = 0; t < N; ++t)
            for (int s = 0; s < N; ++s) P(t, s) = t >= s ? c[t - s] : std::conj(c[s - t]);
    }
    return cache.emplace(key, std::move(P)).first->second;
}

SplitKernel make_kernel(const TimeGrid& grid, SplitSign sign, bool strict) {
    const Mat& P = cached_plus(grid.count, grid.pad_factor, strict);
    SplitKernel k;
    k.grid = grid;
    k.sign = sign;
    k.strict = strict;
    if (sign == SplitSign::plus) {
        k.matrix = P;
    } else if (!strict) {
        // bitwise complement: 1 - 1/2 = 1/2 on the diagonal, negated imaginary lags elsewhere
        k.matrix = P.transpose();
    } else {
        k.matrix = P.conjugate();
    }
    return k;
}

}  // namespace

SplitKernel split_kernel(const TimeGrid& grid, SplitSign sign) { return make_kernel(grid, sign, false); }

SplitKernel strict_split_kernel(const TimeGrid& grid, SplitSign sign) { return make_kernel(grid, sign, true); }

std::pair<Signal, Signal> freq_split(const Signal& signal) {
    const TimeGrid& g = signal.grid;
    const int N = g.count;
    const int L = g.padded();
    std::vector<cplx> x(L, 0.0), spec, back;
    for (int k = 0; k < N; ++k) x[k] = signal.values(k);
    Eigen::FFT<double> fft;
    // g_hat(k) = sum_n e^{+2 pi i k n / L} g_n  (the L/L scale of inv cancels below)
    fft.inv(spec, x);
    for (int k = 0; k < L; ++k) spec[k] *= plus_mask(k, L, false);
    fft.fwd(back, spec);
    Vec pos(N);
    for (int k = 0; k < N; ++k) pos(k) = back[k];
    Signal positive(g, pos, false);
    Signal negative(g, signal.values - pos, false);
    return {positive, negative};
}

double top_decade_weight(const Signal& s) {
    const int N = s.grid.count;
    std::vector<cplx> x(s.values.data(), s.values.data() + N), spec;
    Eigen::FFT<double> fft;
    fft.fwd(spec, x);
    double total = 0, top = 0;
    for (int k = 0; k < N; ++k) {
        const int kk = std::min(k, N - k);  // |omega| index
        const double p = std::norm(spec[k]);
        total += p;
        if (10.0 * kk >= 0.5 * N) top += p;
    }
    return total > 0 ? top / total : 0.0;
}

cplx continuum_split_kernel(double t, SplitSign sign, double eps) {
    const double s = sign == SplitSign::plus ? 1.0 : -1.0;
    // delta^(+)(t) = 1/(2 pi i (t - i eps)),  delta^(-)(t) = -1/(2 pi i (t + i eps))
    return s / (2.0 * std::numbers::pi * I_UNIT * cplx(t, -s * eps));
}

}  // namespace tnresp
