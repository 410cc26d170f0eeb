#include <gtest/gtest.h>

#include <set>

#include "generators.hpp"

using namespace tnresp;

namespace {

Scenario tiny_kerr() { return kerr_coherent_scenario(TimeGrid(-3.0, 0.25, 16, 4), 0.1, 0.6, 12); }

}  // namespace

TEST(ClassicalOracle, RestsWithoutDrive) {
    const TimeGrid g(-2.0, 0.1, 30, 1);
    const Signal q = classical_oscillator_oracle(1.3, 0.7, CurrentProfile::none(g));
    EXPECT_EQ(max_abs(q.values), 0.0);
}

TEST(ClassicalOracle, KickGivesRetardedSine) {
    const TimeGrid g(0.0, 0.1, 60, 1);
    const double w = 0.4, omega = 1.3, mass = 0.7;
    CurrentProfile j = CurrentProfile::none(g);
    j.add_kick(10, w);
    const Signal q = classical_oscillator_oracle(omega, mass, j);
    const ClassicalOscillator osc(omega, mass, g);
    for (int k = 0; k < g.count; ++k) {
        const double tau = g.time(k) - g.time(10);
        EXPECT_NEAR(q[k].real(), w * osc.retarded(tau), 1e-10) << k;
        EXPECT_NEAR(osc.retarded(tau), tau > 0 ? -std::sin(omega * tau) / (mass * omega) : 0.0, 1e-15);
    }
}

TEST(ClassicalOracle, SuperposesLinearly) {
    gen::Rng rng(61);
    const TimeGrid g(-2.0, 0.1, 40, 1);
    const Signal a = gen::bumps(rng, g, 0.5), b = gen::bumps(rng, g, 0.5);
    const Signal qa = classical_oscillator_oracle(1.0, 1.0, CurrentProfile::from_signal(a));
    const Signal qb = classical_oscillator_oracle(1.0, 1.0, CurrentProfile::from_signal(b));
    const Signal qab = classical_oscillator_oracle(1.0, 1.0, CurrentProfile::from_signal(a + b));
    EXPECT_LE(max_abs(Vec(qab.values - qa.values - qb.values)), 1e-12);
}

TEST(FiniteDifference, LinearResponseMatchesKubo) {
    const Scenario s = tiny_kerr();
    const auto kubo = kubo_linear(s.system(2));
    const std::vector<std::vector<int>> pts = {{8, 3}, {12, 12}, {15, 1}, {4, 9}};
    const auto fd = fd_response_oracle(s.dynamics(), s.rho, s.grid, 1, 1, pts);
    for (size_t i = 0; i < pts.size(); ++i) {
        EXPECT_NEAR(std::abs(fd[i].value - kubo.tensor.at(std::span<const int>(pts[i]))), 0.0, 1e-6);
        EXPECT_LE(fd[i].residual, 1e-4);
    }
}

TEST(FiniteDifference, FunctionalRouteAgreesWithMeanRoute) {
    const Scenario s = tiny_kerr();
    const std::vector<std::vector<int>> pts = {{9, 2}, {14, 7}};
    FdOptions fn;
    fn.route = FdRoute::functional;
    FdOptions mn;
    mn.route = FdRoute::mean;
    const auto a = fd_response_oracle(s.dynamics(), s.rho, s.grid, 1, 1, pts, fn);
    const auto b = fd_response_oracle(s.dynamics(), s.rho, s.grid, 1, 1, pts, mn);
    for (size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(std::abs(a[i].value - b[i].value), 0.0, 1e-6);
}

TEST(FiniteDifference, NoOutputsGiveZero) {
    const Scenario s = tiny_kerr();
    const auto fd = fd_response_oracle(s.dynamics(), s.rho, s.grid, 0, 1, {{3}, {9}});
    for (const auto& f : fd) EXPECT_LE(std::abs(f.value), 1e-8);
}

TEST(FiniteDifference, SecondOrderResponseMatchesAssembly) {
    const Scenario s = tiny_kerr();
    const auto d21 = assemble_response(2, 1, s.system());
    const std::vector<std::vector<int>> pts = {{12, 9, 4}, {14, 14, 6}, {10, 6, 10}};
    const auto fd = fd_response_oracle(s.dynamics(), s.rho, s.grid, 2, 1, pts);
    for (size_t i = 0; i < pts.size(); ++i)
        EXPECT_NEAR(std::abs(fd[i].value - d21.tensor.at(std::span<const int>(pts[i]))), 0.0, 1e-4) << i;
}

TEST(FiniteDifference, RejectsBadTuples) {
    const Scenario s = tiny_kerr();
    EXPECT_THROW(fd_response_oracle(s.dynamics(), s.rho, s.grid, 1, 1, {{3}}), PreconditionError);
}

TEST(CausalityScan, MeasuresForbiddenRegionOnly) {
    const TimeGrid g(0.0, 0.25, 8, 1);
    CorrelationTensor t(g, std::vector<LegMeta>(2));
    t.at({5, 2}) = 2.0;
    EXPECT_EQ(causality_scan(t, 1), 0.0);
    t.at({2, 5}) = 0.5;
    EXPECT_DOUBLE_EQ(causality_scan(t, 1), 0.25);
    ResponseFunction r;
    r.blocks = {1, 1};
    r.tensor = t;
    EXPECT_DOUBLE_EQ(causality_scan(r), 0.25);
}

TEST(Catalog, IdsAreUniqueAndKnown) {
    const auto& cat = check_catalog();
    EXPECT_EQ(cat.size(), 13u);
    std::set<std::string> ids;
    int soft = 0;
    for (const auto& c : cat) {
        ids.insert(c.id);
        EXPECT_TRUE(is_known_check(c.id));
        EXPECT_FALSE(c.description.empty());
        soft += !c.hard;
    }
    EXPECT_EQ(ids.size(), cat.size());
    EXPECT_EQ(soft, 1);
    EXPECT_FALSE(is_known_check("no-such-check"));
    EXPECT_THROW(run_check("no-such-check", tiny_kerr()), PreconditionError);
}

TEST(Checks, CheapChecksPassOnSmallScenario) {
    const Scenario s = tiny_kerr();
    for (const char* id : {"kubo-equivalence", "split-kernel-algebra", "substitution-roundtrip", "reality",
                           "probability-conservation"}) {
        const auto r = run_check(id, s);
        EXPECT_TRUE(r.pass) << id << ": " << r.detail << " value " << r.value;
    }
}

TEST(Checks, SeedsAreDeterministic) {
    const Scenario s = tiny_kerr();
    const auto a = run_check("substitution-roundtrip", s, {1, 7});
    const auto b = run_check("substitution-roundtrip", s, {1, 7});
    const auto c = run_check("substitution-roundtrip", s, {1, 8});
    EXPECT_EQ(a.seed, b.seed);
    EXPECT_NE(a.seed, c.seed);
    ASSERT_EQ(a.metrics.size(), b.metrics.size());
    for (size_t i = 0; i < a.metrics.size(); ++i) EXPECT_EQ(a.metrics[i].second, b.metrics[i].second);
}

TEST(Scenarios, ReferenceStates) {
    const auto h = harmonic_vacuum_scenario(TimeGrid(-3.0, 0.25, 16, 4), 8);
    EXPECT_TRUE(h.stationary);
    EXPECT_NEAR(expectation(h.rho, h.coupling().entries).real(), 0.0, 1e-15);
    const auto k = tiny_kerr();
    EXPECT_FALSE(k.stationary);
    EXPECT_EQ(k.system(2).rank_cap(), 2);
    const auto th = kerr_thermal_scenario(TimeGrid(-3.0, 0.25, 16, 4), 0.1, 0.2, 14);
    EXPECT_TRUE(th.stationary);
}

TEST(Pulses, CompactSupportAndShape) {
    const TimeGrid g = default_grid();
    const Signal p = gaussian_pulse(g, 0.3, -1.0, 1.6);
    EXPECT_NEAR(p[g.index_of(-1.0)].real(), 0.3, 1e-12);
    EXPECT_EQ(p[0], cplx(0.0));
    EXPECT_EQ(p[g.count - 1], cplx(0.0));
    EXPECT_LE(top_decade_weight(p), 0.01);
    const Signal b = sine_burst(g, 0.3, 0.0, 1.9, 0.3);
    EXPECT_EQ(b[0], cplx(0.0));
    EXPECT_LE(top_decade_weight(b), 0.01);
}
