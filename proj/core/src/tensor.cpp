#include "tnresp/tensor.hpp"

#include <algorithm>
#include <numeric>

namespace tnresp {

const char* to_string(Side s) { return s == Side::minus ? "minus" : "plus"; }

const char* to_string(Split s) {
    switch (s) {
        case Split::none: return "none";
        case Split::plus: return "plus";
        case Split::minus: return "minus";
    }
    return "?";
}

const char* to_string(Label l) {
    switch (l) {
        case Label::neutral: return "Q";
        case Label::f: return "F";
        case Label::fdag: return "Fdag";
    }
    return "?";
}

CorrelationTensor::CorrelationTensor(TimeGrid g, std::vector<LegMeta> l) : grid(g), legs(std::move(l)) {
    size_t n = 1;
    for (size_t i = 0; i < legs.size(); ++i) n *= static_cast<size_t>(grid.count);
    data.assign(n, cplx(0.0));
}

size_t CorrelationTensor::offset(std::span<const int> idx) const {
    size_t off = 0;
    for (int v : idx) off = off * grid.count + v;
    return off;
}

void CorrelationTensor::unravel(size_t flat, std::vector<int>& idx) const {
    idx.resize(legs.size());
    for (int l = rank() - 1; l >= 0; --l) {
        idx[l] = static_cast<int>(flat % grid.count);
        flat /= grid.count;
    }
}

double CorrelationTensor::max_abs() const {
    double m = 0;
    for (const auto& v : data) m = std::max(m, std::abs(v));
    return m;
}

double CorrelationTensor::max_imag() const {
    double m = 0;
    for (const auto& v : data) m = std::max(m, std::abs(v.imag()));
    return m;
}

CorrelationTensor& CorrelationTensor::operator+=(const CorrelationTensor& o) {
    if (o.data.size() != data.size()) throw PreconditionError("tensor sum: shape mismatch");
    for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
}

CorrelationTensor& CorrelationTensor::operator*=(cplx s) {
    for (auto& v : data) v *= s;
    return *this;
}

double max_abs_diff(const CorrelationTensor& a, const CorrelationTensor& b) {
    if (a.data.size() != b.data.size()) throw PreconditionError("tensor diff: shape mismatch");
    double m = 0;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

CorrelationTensor apply_leg_matrix(const CorrelationTensor& in, int leg, const Mat& K) {
    if (leg < 0 || leg >= in.rank()) throw PreconditionError("leg index out of range");
    const int N = in.extent();
    if (K.rows() != N || K.cols() != N) throw PreconditionError("leg matrix has wrong size");
    CorrelationTensor out(in.grid, in.legs);
    size_t stride = 1;
    for (int l = leg + 1; l < in.rank(); ++l) stride *= N;
    const size_t block = stride * N;
    const size_t outer = in.data.size() / block;
    using MapC = Eigen::Map<const Eigen::MatrixXcd>;
    using MapM = Eigen::Map<Eigen::MatrixXcd>;
    for (size_t o = 0; o < outer; ++o) {
        // column-major stride x N view: element (i, s) = in[o, s, i]
        MapC src(in.data.data() + o * block, static_cast<Eigen::Index>(stride), N);
        MapM dst(out.data.data() + o * block, static_cast<Eigen::Index>(stride), N);
        dst.noalias() = src * K.transpose();
    }
    return out;
}

namespace {

Split tag(SplitSign s) { return s == SplitSign::plus ? Split::plus : Split::minus; }

void require_unsplit(const CorrelationTensor& in, int leg) {
    if (leg < 0 || leg >= in.rank()) throw PreconditionError("leg index out of range");
    if (in.legs[leg].split != Split::none) throw PreconditionError("leg already split");
}

}  // namespace

CorrelationTensor convolve_leg(const CorrelationTensor& in, int leg, SplitSign sign) {
    require_unsplit(in, leg);
    CorrelationTensor out = apply_leg_matrix(in, leg, split_kernel(in.grid, sign).matrix);
    out.legs[leg].split = tag(sign);
    return out;
}

CorrelationTensor convolve_leg_truncated(const CorrelationTensor& in, int leg, SplitSign sign, int upper_time) {
    require_unsplit(in, leg);
    if (upper_time >= in.extent()) throw PreconditionError("upper_time beyond grid");
    Mat K = split_kernel(in.grid, sign).matrix;
    for (int s = std::max(upper_time + 1, 0); s < in.extent(); ++s) K.col(s).setZero();
    CorrelationTensor out = apply_leg_matrix(in, leg, K);
    out.legs[leg].split = tag(sign);
    return out;
}

CorrelationTensor permute_legs(const CorrelationTensor& in, const std::vector<int>& perm) {
    const int r = in.rank();
    if (static_cast<int>(perm.size()) != r) throw PreconditionError("permutation size mismatch");
    std::vector<LegMeta> legs(r);
    for (int i = 0; i < r; ++i) legs[i] = in.legs[perm[i]];
    CorrelationTensor out(in.grid, legs);
    std::vector<int> idx, src(r);
    for (size_t f = 0; f < out.data.size(); ++f) {
        out.unravel(f, idx);
        for (int i = 0; i < r; ++i) src[perm[i]] = idx[i];
        out.data[f] = in.at(std::span<const int>(src));
    }
    return out;
}

CorrelationTensor symmetrize_legs(const CorrelationTensor& in, const std::vector<int>& group) {
    if (group.size() < 2) return in;
    std::vector<int> sorted = group;
    std::sort(sorted.begin(), sorted.end());
    CorrelationTensor acc(in.grid, in.legs);
    std::vector<int> perm(in.rank());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> arrangement = sorted;
    int count = 0;
    do {
        std::vector<int> p = perm;
        for (size_t i = 0; i < sorted.size(); ++i) p[sorted[i]] = arrangement[i];
        acc += permute_legs(in, p);
        ++count;
    } while (std::next_permutation(arrangement.begin(), arrangement.end()));
    acc *= cplx(1.0 / count);
    acc.legs = in.legs;
    return acc;
}

}  // namespace tnresp
