#include <gtest/gtest.h>

#include <numbers>

#include "generators.hpp"

using namespace tnresp;

namespace {

double diff(const Signal& a, const Signal& b) { return max_abs(Vec(a.values - b.values)); }

// Half-band DFT sum with half weights on DC and Nyquist, written out term by term.
cplx kernel_oracle(int n, int L) {
    cplx s = 0.5 + 0.5 * (n % 2 ? -1.0 : 1.0);
    for (int k = 1; k < L / 2; ++k) s += std::exp(cplx(0, -2.0 * std::numbers::pi * k * n / L));
    return s / static_cast<double>(L);
}

}  // namespace

TEST(TimeGrid, IndexAndSpan) {
    const TimeGrid g(-2.0, 0.5, 16, 2);
    EXPECT_DOUBLE_EQ(g.time(4), 0.0);
    EXPECT_EQ(g.index_of(0.1), 4);
    EXPECT_EQ(g.index_of(-100), 0);
    EXPECT_EQ(g.index_of(100), 15);
    EXPECT_EQ(g.padded(), 32);
    EXPECT_THROW(TimeGrid(0, 0.0, 16), PreconditionError);
    EXPECT_THROW(TimeGrid(0, 0.1, 4), PreconditionError);
}

TEST(FreqSplit, OnBinCosine) {
    const TimeGrid g(0.0, 0.2, 32, 1);
    const double w0 = 2 * std::numbers::pi * 3 / (32 * 0.2);
    const Signal c = Signal::sample(g, [&](double t) { return cplx(std::cos(w0 * t), 0); }, true);
    const Signal expect = Signal::sample(g, [&](double t) { return 0.5 * std::exp(cplx(0, -w0 * t)); });
    const auto [p, m] = freq_split(c);
    EXPECT_LE(diff(p, expect), 1e-13);
    EXPECT_LE(diff(m, expect.conj()), 1e-13);
}

TEST(FreqSplit, ConstantSplitsInHalf) {
    const TimeGrid g(0.0, 0.25, 24, 1);
    const Signal c = Signal::sample(g, [](double) { return cplx(1.5, -0.5); });
    const auto [p, m] = freq_split(c);
    EXPECT_LE(diff(p, 0.5 * c), 1e-14);
    EXPECT_LE(diff(m, 0.5 * c), 1e-14);
}

TEST(FreqSplit, ConjugationSwapsParts) {
    gen::Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const TimeGrid g(0.0, gen::uniform(rng, 0.05, 0.5), gen::integer(rng, 8, 40), gen::integer(rng, 1, 4));
        const Signal s = gen::noise(rng, g, 1.0, trial % 2 == 1);
        const auto [p, m] = freq_split(s);
        const auto [pc, mc] = freq_split(s.conj());
        EXPECT_LE(diff(pc, m.conj()), 1e-12);
        EXPECT_LE(diff(mc, p.conj()), 1e-12);
        EXPECT_LE(diff(p + m, s), 1e-14);
    }
}

TEST(SplitKernel, MatchesHalfBandSum) {
    for (int pad : {1, 2, 4}) {
        const TimeGrid g(0.0, 0.3, 12, pad);
        const Mat& P = split_kernel(g, SplitSign::plus).matrix;
        for (int t = 0; t < g.count; ++t)
            for (int s = 0; s < g.count; ++s) {
                const int n = ((t - s) % g.padded() + g.padded()) % g.padded();
                EXPECT_NEAR(std::abs(P(t, s) - kernel_oracle(n, g.padded())), 0.0, 1e-14);
            }
    }
}

TEST(SplitKernel, AlgebraOnGrids) {
    gen::Rng rng(5);
    for (int trial = 0; trial < 12; ++trial) {
        const TimeGrid g(gen::uniform(rng, -3, 3), gen::uniform(rng, 0.05, 0.5), gen::integer(rng, 8, 48),
                         gen::integer(rng, 1, 8));
        const Mat& P = split_kernel(g, SplitSign::plus).matrix;
        const Mat& M = split_kernel(g, SplitSign::minus).matrix;
        EXPECT_LE(max_abs(Mat(P + M - Mat::Identity(g.count, g.count))), 1e-14);
        EXPECT_EQ(max_abs(Mat(M - P.transpose())), 0.0);
        EXPECT_EQ(max_abs(Mat(M - P.conjugate())), 0.0);
        // bilinear adjoint: sum_t h (P+ g) = sum_t (P- h) g
        const Signal h = gen::noise(rng, g, 1, true), s = gen::noise(rng, g, 1, true);
        const cplx lhs = (h.values.array() * (P * s.values).array()).sum() * g.dt;
        const cplx rhs = ((M * h.values).array() * s.values.array()).sum() * g.dt;
        EXPECT_LE(std::abs(lhs - rhs), 1e-10);
    }
}

TEST(SplitKernel, ApplyEqualsFreqSplit) {
    gen::Rng rng(6);
    const TimeGrid g(-1.0, 0.2, 20, 4);
    const Signal s = gen::noise(rng, g, 1, true);
    const auto [p, m] = freq_split(s);
    EXPECT_LE(diff(split_kernel(g, SplitSign::plus).apply(s), p), 1e-12);
    EXPECT_LE(diff(split_kernel(g, SplitSign::minus).apply(s), m), 1e-12);
}

TEST(SplitKernel, StrictVariantIsProjectorAtPadOne) {
    gen::Rng rng(7);
    const TimeGrid g(0.0, 0.2, 16, 1);
    const Mat& P = strict_split_kernel(g, SplitSign::plus).matrix;
    const Mat& M = strict_split_kernel(g, SplitSign::minus).matrix;
    EXPECT_LE(max_abs(Mat(P * P - P)), 1e-13);
    EXPECT_LE(max_abs(Mat(P * M)), 1e-13);
    const Signal s = gen::no_edge_bins(rng, g, 1.0);
    EXPECT_LE(max_abs(Vec(P * s.values + M * s.values - s.values)), 1e-13);
}

TEST(SplitKernel, ContinuumKernelShape) {
    // delta^(+)(t) = 1 / (2 pi i (t - i eps)); conj(delta^(+)(t)) = delta^(-)(t) for real t
    for (double t : {-2.0, -0.3, 0.7, 3.0}) {
        const cplx p = continuum_split_kernel(t, SplitSign::plus, 1e-3);
        const cplx m = continuum_split_kernel(t, SplitSign::minus, 1e-3);
        EXPECT_NEAR(std::abs(p - std::conj(m)), 0.0, 1e-15);
        EXPECT_NEAR(std::abs(p - 1.0 / (2 * std::numbers::pi * cplx(0, 1) * cplx(t, -1e-3))), 0.0, 1e-15);
    }
}

TEST(TopDecade, SmoothVersusRough) {
    const TimeGrid g(-8, 0.25, 64, 4);
    EXPECT_LT(top_decade_weight(gaussian_pulse(g, 0.3, -1.0, 1.6)), 0.01);
    gen::Rng rng(8);
    EXPECT_GT(top_decade_weight(gen::noise(rng, g, 1.0)), 0.5);
}

TEST(TensorLegs, RankOneConvolutionEqualsFreqSplit) {
    gen::Rng rng(9);
    const TimeGrid g(0.0, 0.25, 16, 4);
    const Signal s = gen::noise(rng, g, 1, true);
    CorrelationTensor t(g, std::vector<LegMeta>(1));
    for (int k = 0; k < g.count; ++k) t.data[k] = s[k];
    const auto p = convolve_leg(t, 0, SplitSign::plus);
    const auto m = convolve_leg(t, 0, SplitSign::minus);
    const auto [sp, sm] = freq_split(s);
    for (int k = 0; k < g.count; ++k) {
        EXPECT_NEAR(std::abs(p.data[k] - sp[k]), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(p.data[k] + m.data[k] - s[k]), 0.0, 1e-14);
    }
    EXPECT_EQ(p.legs[0].split, Split::plus);
    EXPECT_THROW(convolve_leg(p, 0, SplitSign::minus), PreconditionError);
}

TEST(TensorLegs, PlusAndMinusSumBackOnAnyLeg) {
    gen::Rng rng(10);
    const TimeGrid g(0.0, 0.25, 10, 2);
    CorrelationTensor t(g, std::vector<LegMeta>(3));
    for (auto& v : t.data) v = cplx(gen::uniform(rng, -1, 1), gen::uniform(rng, -1, 1));
    for (int leg = 0; leg < 3; ++leg) {
        auto sum = convolve_leg(t, leg, SplitSign::plus);
        sum += convolve_leg(t, leg, SplitSign::minus);
        EXPECT_LE(max_abs_diff(sum, t), 1e-14);
    }
}

TEST(TensorLegs, TruncatedConvolutionLimits) {
    gen::Rng rng(12);
    const TimeGrid g(0.0, 0.25, 12, 4);
    CorrelationTensor t(g, std::vector<LegMeta>(2));
    for (auto& v : t.data) v = cplx(gen::uniform(rng, -1, 1), gen::uniform(rng, -1, 1));
    EXPECT_LE(max_abs_diff(convolve_leg_truncated(t, 1, SplitSign::plus, g.count - 1),
                           convolve_leg(t, 1, SplitSign::plus)), 0.0);
    const auto one = convolve_leg_truncated(t, 1, SplitSign::minus, 0);
    const Mat& K = split_kernel(g, SplitSign::minus).matrix;
    for (int a = 0; a < g.count; ++a)
        for (int b = 0; b < g.count; ++b)
            EXPECT_NEAR(std::abs(one.at({a, b}) - K(b, 0) * t.at({a, 0})), 0.0, 1e-15);
}

TEST(TensorLegs, PermuteAndSymmetrize) {
    gen::Rng rng(13);
    const TimeGrid g(0.0, 0.25, 8, 1);
    CorrelationTensor t(g, std::vector<LegMeta>(2));
    for (auto& v : t.data) v = cplx(gen::uniform(rng, -1, 1), 0);
    const auto p = permute_legs(t, {1, 0});
    const auto s = symmetrize_legs(t, {0, 1});
    for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
            EXPECT_EQ(p.at({a, b}), t.at({b, a}));
            EXPECT_NEAR(std::abs(s.at({a, b}) - 0.5 * (t.at({a, b}) + t.at({b, a}))), 0.0, 1e-15);
        }
}
