#include <gtest/gtest.h>

#include "generators.hpp"

using namespace tnresp;

TEST(Ladder, EntriesOfAnnihilator) {
    const auto [a, ad] = build_ladder(FockSpace::single(3), 0);
    EXPECT_NEAR(std::abs(a.entries(0, 1) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(a.entries(1, 2) - std::sqrt(2.0)), 0.0, 1e-15);
    Mat off = a.entries;
    off(0, 1) = off(1, 2) = 0.0;
    EXPECT_EQ(max_abs(off), 0.0);
    EXPECT_EQ(max_abs(Mat(ad.entries - a.entries.adjoint())), 0.0);
}

TEST(Ladder, NumberOperatorIsDiagonal) {
    const int N = 7;
    const auto [a, ad] = build_ladder(FockSpace::single(N), 0);
    const Mat n = ad.entries * a.entries;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) EXPECT_NEAR(std::abs(n(i, j) - (i == j ? cplx(i) : cplx(0))), 0.0, 1e-13);
}

TEST(Ladder, CommutatorTruncationConfinedToTopLevel) {
    const int N = 9;
    const auto [a, ad] = build_ladder(FockSpace::single(N), 0);
    const Mat c = commutator(a.entries, ad.entries) - Mat::Identity(N, N);
    EXPECT_LE(max_abs(Mat(c.topLeftCorner(N - 1, N - 1))), 1e-12);
    EXPECT_GT(std::abs(c(N - 1, N - 1)), 1.0);  // [a, a^dag] = -(N-1) on the top level
}

TEST(Ladder, TwoModesAreIndependent) {
    const FockSpace sp({3, 4});
    EXPECT_EQ(sp.total_dim(), 12);
    const auto [a0, ad0] = build_ladder(sp, 0);
    const auto [a1, ad1] = build_ladder(sp, 1);
    EXPECT_LE(max_abs(commutator(a0.entries, a1.entries)), 1e-14);
    EXPECT_LE(max_abs(commutator(a0.entries, ad1.entries)), 1e-14);
}

TEST(Hamiltonian, HarmonicSpectrum) {
    for (double hbar : {1.0, 0.5}) {
        const FockSpace sp = FockSpace::single(3, hbar);
        ModelSpec m;
        const auto H = build_hamiltonian(m, sp);
        EXPECT_NEAR(std::abs(H.entries(0, 0)), 0.0, 1e-15);
        EXPECT_NEAR(std::abs(H.entries(1, 1) - hbar), 0.0, 1e-15);
        EXPECT_NEAR(std::abs(H.entries(2, 2) - 2 * hbar), 0.0, 1e-15);
        EXPECT_TRUE(H.hermitian_hint);
    }
}

TEST(Hamiltonian, KerrWithZeroChiIsHarmonic) {
    const FockSpace sp = FockSpace::single(6);
    ModelSpec h, k;
    k.kind = ModelKind::kerr;
    k.chi = 0.0;
    EXPECT_EQ(max_abs(Mat(build_hamiltonian(h, sp).entries - build_hamiltonian(k, sp).entries)), 0.0);
}

TEST(Hamiltonian, KerrLevels) {
    // omega n + chi n^2 per level, evaluated by hand
    ModelSpec k;
    k.kind = ModelKind::kerr;
    k.chi = 0.2;
    const auto H = build_hamiltonian(k, FockSpace::single(4));
    const double expect[] = {0.0, 1.2, 2.8, 4.8};
    for (int n = 0; n < 4; ++n) EXPECT_NEAR(std::abs(H.entries(n, n) - expect[n]), 0.0, 1e-14);
    EXPECT_NEAR(max_abs(Mat(H.entries - Mat(H.entries.diagonal().asDiagonal()))), 0.0, 1e-15);
}

TEST(Coupling, QuadratureMatrixElement) {
    ModelSpec m;
    const auto Q = build_coupling_operator(m, FockSpace::single(2));
    EXPECT_NEAR(std::abs(Q.entries(0, 1) - 1.0 / std::sqrt(2.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(Q.entries(1, 0) - 1.0 / std::sqrt(2.0)), 0.0, 1e-15);
    EXPECT_TRUE(Q.hermitian_hint);
}

TEST(Coupling, NumberCouplingCommutesWithHarmonic) {
    ModelSpec m;
    m.coupling = CouplingKind::number;
    const FockSpace sp = FockSpace::single(8);
    const auto Q = build_coupling_operator(m, sp);
    EXPECT_TRUE(Q.hermitian_hint);
    EXPECT_LE(max_abs(Mat(Q.entries - Mat(Q.entries.diagonal().asDiagonal()))), 0.0);
    EXPECT_LE(max_abs(commutator(Q.entries, build_hamiltonian(m, sp).entries)), 1e-14);
}

TEST(Coupling, HermiticityCheckRejectsBadHint) {
    OperatorMatrix bad(Mat::Identity(2, 2) * cplx(0, 1), true);
    EXPECT_THROW(bad.check(), NumericalError);
}

TEST(States, ZeroAmplitudeAndZeroOccupationGiveVacuum) {
    const FockSpace sp = FockSpace::single(6);
    const Mat vac = vacuum_state(sp).entries;
    EXPECT_NEAR(std::abs(vac(0, 0) - 1.0), 0.0, 0.0);
    EXPECT_LE(max_abs(Mat(coherent_state(sp, {0.0}).entries - vac)), 1e-15);
    EXPECT_LE(max_abs(Mat(thermal_state(sp, {0.0}).entries - vac)), 1e-15);
}

TEST(States, CoherentMeanNumber) {
    const FockSpace sp = FockSpace::single(14);
    const auto rho = coherent_state(sp, {cplx(1.0, 0.0)});
    const auto [a, ad] = build_ladder(sp, 0);
    EXPECT_NEAR(expectation(rho, ad.entries * a.entries).real(), 1.0, 1e-8);
}

TEST(States, ThermalMeanNumber) {
    // geometric distribution truncated at 16 levels; nbar 0.2 leaves ~1e-12 above
    const FockSpace sp = FockSpace::single(16);
    const auto rho = thermal_state(sp, {0.2});
    const auto [a, ad] = build_ladder(sp, 0);
    EXPECT_NEAR(expectation(rho, ad.entries * a.entries).real(), 0.2, 1e-9);
    EXPECT_NEAR(rho.entries.trace().real(), 1.0, 1e-14);
}

TEST(States, LeakPreconditionFires) {
    const FockSpace sp = FockSpace::single(2);
    EXPECT_THROW(coherent_state(sp, {cplx(2.0, 0.0)}), PreconditionError);
    EXPECT_THROW(thermal_state(FockSpace::single(4), {3.0}), PreconditionError);
}

TEST(States, LeakMetricProperty) {
    gen::Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int N = gen::integer(rng, 4, 10);
        const FockSpace sp = FockSpace::single(N);
        const auto rho = gen::random_state(rng, N);
        const double expect = rho.entries(N - 1, N - 1).real() + rho.entries(N - 2, N - 2).real();
        EXPECT_NEAR(leak_metric(sp, rho), expect, 1e-14);
    }
}
