#pragma once

#include <functional>
#include <utility>

#include "tnresp/common.hpp"

namespace tnresp {

struct TimeGrid {
    double t0 = 0.0;
    double dt = 1.0;
    int count = 0;
    int pad_factor = 4;

    TimeGrid() = default;
    TimeGrid(double t0_, double dt_, int n, int pad = 4);

    double time(int k) const { return t0 + dt * k; }
    double span() const { return dt * count; }
    int padded() const { return pad_factor * count; }
    // Grid index nearest to t (clamped).
    int index_of(double t) const;
    TimeGrid with_pad(int pad) const { return TimeGrid(t0, dt, count, pad); }

    bool operator==(const TimeGrid& o) const {
        return t0 == o.t0 && dt == o.dt && count == o.count && pad_factor == o.pad_factor;
    }
};

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what);

struct Signal {
    TimeGrid grid;
    Vec values;
    bool real_hint = false;

    Signal() = default;
    Signal(TimeGrid g, Vec v, bool real = false);
    static Signal zeros(const TimeGrid& g) { return Signal(g, Vec::Zero(g.count), true); }
    static Signal sample(const TimeGrid& g, const std::function<cplx(double)>& f, bool real = false);

    int size() const { return static_cast<int>(values.size()); }
    cplx operator[](int k) const { return values(k); }
    Signal conj() const { return Signal(grid, values.conjugate(), real_hint); }
};

Signal operator+(const Signal& a, const Signal& b);
Signal operator-(const Signal& a, const Signal& b);
Signal operator*(cplx s, const Signal& a);

enum class SplitSign { plus, minus };

struct SplitKernel {
    TimeGrid grid;
    SplitSign sign = SplitSign::plus;
    bool strict = false;  // DC and Nyquist bins excluded instead of halved
    Mat matrix;

    Signal apply(const Signal& s) const;
};

// Frequency split through zero-padded DFT masks: positive part keeps bins with omega > 0
// and half of the DC (and Nyquist) bin. negative = signal - positive, so the two parts
// sum to the input exactly.
std::pair<Signal, Signal> freq_split(const Signal& signal);

// Toeplitz realization of the same split, truncated back to the grid. Entries satisfy
// P_plus + P_minus = I, P_minus = P_plus^T and P_minus = conj(P_plus) bit for bit.
SplitKernel split_kernel(const TimeGrid& grid, SplitSign sign);

// Variant without the halved DC/Nyquist bins. Acts as an exact frequency filter for
// signals free of those bins; P_plus + P_minus != I.
SplitKernel strict_split_kernel(const TimeGrid& grid, SplitSign sign);

// Fraction of spectral weight in the top decade of |omega| (|omega| >= omega_nyquist/10),
// computed on the unpadded grid.
double top_decade_weight(const Signal& s);

// Continuum kernel delta^(+-)(t) = +-1/(2 pi i (t -+ i eps)); sampled into dt * value.
cplx continuum_split_kernel(double t, SplitSign sign, double eps);

}  // namespace tnresp
