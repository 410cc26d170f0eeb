#include <gtest/gtest.h>

#include <set>

#include "generators.hpp"

using namespace tnresp;

namespace {

Scenario small_kerr(double chi = 0.1, int pad = 4) {
    Scenario s = kerr_coherent_scenario(TimeGrid(-4.0, 0.25, 24, pad), chi, 0.8, 10);
    return s;
}

double rel(double e, double scale) { return scale > 0 ? e / scale : e; }

}  // namespace

TEST(Substitution, ZerosMapToZeros) {
    const TimeGrid g(0.0, 0.25, 16, 2);
    const auto es = substitute_to_eta_sigma(Signal::zeros(g), Signal::zeros(g), 1.0);
    EXPECT_EQ(max_abs(es.eta.values), 0.0);
    EXPECT_EQ(max_abs(es.sigma.values), 0.0);
}

TEST(Substitution, RealArgumentsGiveConjugatePair) {
    gen::Rng rng(41);
    const TimeGrid g(0.0, 0.25, 20, 4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto pm = substitute_to_eta_pm(gen::noise(rng, g, 1), gen::noise(rng, g, 1), 0.7);
        EXPECT_LE(max_abs(Vec(pm.minus.values - pm.plus.values.conjugate())), 1e-13);
    }
}

TEST(Substitution, RoundTrips) {
    gen::Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const TimeGrid g(0.0, gen::uniform(rng, 0.05, 0.4), gen::integer(rng, 8, 32), gen::integer(rng, 1, 4));
        const double hb = gen::uniform(rng, 0.3, 2.0);
        const Signal em = gen::noise(rng, g, 1, true), ep = gen::noise(rng, g, 1, true);
        const auto es = substitute_to_eta_sigma(em, ep, hb);
        const auto back = substitute_to_eta_pm(es.eta, es.sigma, hb);
        EXPECT_LE(max_abs(Vec(back.minus.values - em.values)), 1e-10);
        EXPECT_LE(max_abs(Vec(back.plus.values - ep.values)), 1e-10);
        const Signal eta = gen::noise(rng, g, 1, true), sigma = gen::noise(rng, g, 1, true);
        const auto pm = substitute_to_eta_pm(eta, sigma, hb);
        const auto fwd = substitute_to_eta_sigma(pm.minus, pm.plus, hb);
        EXPECT_LE(max_abs(Vec(fwd.eta.values - eta.values)), 1e-10);
        EXPECT_LE(max_abs(Vec(fwd.sigma.values - sigma.values)), 1e-10);
    }
}

TEST(ResponseFunctional, NormalisationRealityAndShift) {
    gen::Rng rng(43);
    const Scenario s = small_kerr();
    const Dynamics dyn = s.dynamics();
    const auto none = CurrentProfile::none(s.grid);
    for (int trial = 0; trial < 4; ++trial) {
        const Signal sigma = gen::bumps(rng, s.grid, 0.2);
        EXPECT_NEAR(std::abs(response_functional(Signal::zeros(s.grid), sigma, none, dyn, s.rho) - 1.0), 0.0, 1e-12);
        const Signal eta = gen::bumps(rng, s.grid, 0.2);
        const cplx v = response_functional(eta, sigma, none, dyn, s.rho);
        EXPECT_LE(std::abs(v.imag()), 1e-10);
        const Signal j = gen::bumps(rng, s.grid, 0.2);
        const cplx driven = response_functional(eta, sigma, CurrentProfile::from_signal(j), dyn, s.rho);
        const cplx shifted = response_functional(eta, sigma + j, none, dyn, s.rho);
        EXPECT_LE(std::abs(driven - shifted), 1e-10);
    }
}

TEST(TimeNormal, RankOneIsMeanOfDrivenOperator) {
    const Scenario s = small_kerr();
    const Dynamics dyn = s.dynamics();
    const auto U = propagate(dyn, CurrentProfile::from_signal(gaussian_pulse(s.grid, 0.3, 0.0, 0.6)), s.grid);
    const auto qj = heisenberg_trajectory(U, dyn.couplings[0], "j");
    const MomentTable table({qj}, s.rho, 2);
    const Signal q = mean_signal(qj, s.rho);
    for (int k = 0; k < s.grid.count; ++k) {
        const int t[] = {k};
        EXPECT_NEAR(time_normal_average(table, t), q[k].real(), 1e-13);
    }
}

TEST(TimeNormal, RankTwoExpansionHasFourSidePatterns) {
    const auto terms = enumerate_terms(2, 0);
    ASSERT_EQ(terms.size(), 4u);
    std::set<std::vector<Side>> patterns;
    for (const auto& d : terms) {
        patterns.insert(d.output_sides);
        for (size_t i = 0; i < 2; ++i)
            EXPECT_EQ(d.output_splits[i], d.output_sides[i] == Side::plus ? Split::plus : Split::minus);
    }
    EXPECT_EQ(patterns.size(), 4u);
}

TEST(TimeNormal, PointwiseMatchesTensor) {
    gen::Rng rng(44);
    const Scenario s = small_kerr();
    const auto sys = s.system(3);
    const auto T = time_normal_tensor(*sys.table, 2);
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<int> t = {gen::integer(rng, 0, 23), gen::integer(rng, 0, 23)};
        double im = 1.0;
        EXPECT_NEAR(time_normal_average(*sys.table, t, &im), T.at(t).real(), 1e-13);
        EXPECT_LE(im, 1e-10);
    }
}

TEST(TimeNormal, CoherentShiftAddsClassicalProduct) {
    // free field: Q = q(t) + vacuum fluctuation, the split of a c-number product is exact,
    // so TN_alpha - TN_vacuum = q(t1) q(t2)
    const TimeGrid g(-4.0, 0.25, 24, 4);
    Scenario vac = harmonic_vacuum_scenario(g, 14);
    Scenario coh = vac;
    coh.rho = coherent_state(coh.space, {cplx(0.7, 0.4)});
    const auto tv = time_normal_tensor(*vac.system(2).table, 2);
    const auto sys = coh.system(2);
    const auto tc = time_normal_tensor(*sys.table, 2);
    const Signal q = mean_signal(sys.q0(), coh.rho);
    double err = 0;
    for (int a = 0; a < g.count; ++a)
        for (int b = 0; b < g.count; ++b) err = std::max(err, std::abs(tc.at({a, b}) - tv.at({a, b}) - q[a] * q[b]));
    EXPECT_LE(err, 1e-8);
}

TEST(Gkk, KerrAtZeroChiEqualsFreeField) {
    const Scenario k = small_kerr(0.0);
    Scenario h = k;
    h.model.kind = ModelKind::harmonic;
    EXPECT_NEAR(gkk_deviation(k), gkk_deviation(h), 1e-13);
    EXPECT_NEAR(gkk_excess_deviation(gkk_comparison(k), gkk_comparison(h)), 0.0, 1e-13);
}

TEST(Gkk, ExcessDeviationGrowsWithChi) {
    const Scenario base = small_kerr(0.0);
    const auto free = gkk_comparison(base);
    double prev = 0;
    for (double chi : {0.05, 0.1, 0.2}) {
        const double ex = gkk_excess_deviation(gkk_comparison(small_kerr(chi)), free);
        EXPECT_GE(ex, prev);
        prev = ex;
    }
    EXPECT_GT(prev, 0.0);
}

TEST(Terms, CountsSignsAndPowers) {
    EXPECT_EQ(enumerate_terms(1, 1).size(), 4u);
    EXPECT_EQ(enumerate_terms(2, 1).size(), 8u);
    for (int m = 0; m <= 3; ++m)
        for (int n = 0; m + n <= 4; ++n) {
            if (m + n == 0) continue;
            const auto terms = enumerate_terms(m, n);
            EXPECT_EQ(terms.size(), 1u << (m + n));
            std::set<std::string> canon;
            for (const auto& d : terms) {
                canon.insert(d.canonical());
                int minus_inputs = 0;
                for (auto s : d.input_sides) minus_inputs += s == Side::minus;
                EXPECT_EQ(d.sign, minus_inputs % 2 ? -1 : 1);
                EXPECT_EQ(d.hbar_power, n);
                EXPECT_FALSE(d.differs_from_side_rule);
            }
            EXPECT_EQ(canon.size(), terms.size());
        }
    EXPECT_THROW(enumerate_terms(0, 0), PreconditionError);
}

TEST(Assembly, LinearResponseEqualsKubo) {
    for (const Scenario& s : {small_kerr(), harmonic_vacuum_scenario(TimeGrid(-4, 0.25, 24, 4), 10),
                              kerr_thermal_scenario(TimeGrid(-4, 0.25, 24, 4), 0.1, 0.3, 14)}) {
        const auto sys = s.system(2);
        const auto k = kubo_linear(sys);
        EXPECT_LE(rel(max_abs_diff(k.tensor, assemble_response(1, 1, sys).tensor), k.tensor.max_abs()), 1e-10);
    }
}

TEST(Assembly, ProbabilityConservation) {
    const auto sys = small_kerr().system(3);
    for (int n : {1, 2}) {
        const auto d = assemble_response(0, n, sys);
        EXPECT_LE(d.tensor.max_abs(), 1e-12) << n;
    }
}

TEST(Assembly, CausalFormAgreesAndVanishesWhereForbidden) {
    const auto sys = small_kerr().system(3);
    const auto direct = assemble_response(2, 1, sys);
    const auto causal = assemble_response_causal(2, 1, sys);
    EXPECT_LE(rel(max_abs_diff(direct.tensor, causal.tensor), direct.tensor.max_abs()), 1e-6);
    std::vector<int> idx;
    size_t forbidden = 0;
    for (size_t f = 0; f < causal.tensor.size(); ++f) {
        causal.tensor.unravel(f, idx);
        if (in_forbidden_region(idx, 2)) {
            ++forbidden;
            EXPECT_EQ(causal.tensor.data[f], cplx(0.0));
        }
    }
    EXPECT_GT(forbidden, 0u);
    EXPECT_EQ(causality_scan(causal), 0.0);
}

TEST(Kubo, HarmonicIsStateIndependentSine) {
    const TimeGrid g(-4, 0.25, 24, 4);
    for (const Scenario& s : {harmonic_vacuum_scenario(g, 12), [&] {
             Scenario c = harmonic_vacuum_scenario(g, 12);
             c.rho = coherent_state(c.space, {cplx(0.6, 0.2)});
             return c;
         }()}) {
        const auto k = kubo_linear(s.system(2));
        for (int a = 0; a < g.count; ++a)
            for (int b = 0; b < g.count; ++b) {
                const double tau = (a - b) * g.dt;
                const double expect = a > b ? -std::sin(tau) : 0.0;  // theta(0) sin(0) = 0
                EXPECT_NEAR(k.tensor.at({a, b}).real(), expect, 1e-9);
            }
    }
}

TEST(Kubo, CommutingModelVanishes) {
    Scenario s = harmonic_vacuum_scenario(TimeGrid(-4, 0.25, 24, 4), 14);
    s.model.coupling = CouplingKind::number;
    s.rho = thermal_state(s.space, {0.3});
    EXPECT_LE(kubo_linear(s.system(2)).tensor.max_abs(), 1e-14);
}

TEST(Reconstruction, GreensFunctionsFromResponses) {
    const Scenario s = small_kerr();
    const auto sys = s.system(3);
    std::map<std::pair<int, int>, ResponseFunction> R;
    for (int m = 0; m <= 3; ++m)
        for (int n = 0; m + n <= 3; ++n)
            if (m + n >= 1) R.emplace(std::pair{m, n}, assemble_response(m, n, sys));
    const Signal q = mean_signal(sys.q0(), s.rho);
    for (auto [k, l] : {std::pair{1, 0}, std::pair{0, 1}}) {
        const auto g1 = reconstruct_green(k, l, R, sys.hbar());
        for (int a = 0; a < s.grid.count; ++a) EXPECT_NEAR(std::abs(g1.data[a] - q[a]), 0.0, 1e-12);
    }
    for (auto [k, l] : {std::pair{0, 2}, std::pair{1, 1}, std::pair{2, 0}, std::pair{1, 2}, std::pair{2, 1}}) {
        std::vector<LegMeta> legs(k + l);
        for (int i = 0; i < k; ++i) legs[i].side = Side::minus;
        const auto direct = ordered_tensor(*sys.table, legs);
        const auto rec = reconstruct_green(k, l, R, sys.hbar());
        EXPECT_LE(rel(max_abs_diff(direct, rec), direct.max_abs()), 1e-8) << k << "," << l;
    }
    R.erase({1, 1});
    EXPECT_THROW(reconstruct_green(1, 1, R, sys.hbar()), PreconditionError);
}

TEST(Reality, DiscardAbortsOnLargeResidue) {
    const TimeGrid g(0, 0.25, 8, 1);
    CorrelationTensor t(g, std::vector<LegMeta>(1));
    t.data[0] = cplx(1.0, 1e-3);
    EXPECT_THROW(finalize_real(t, {1, 0}, Assembly::direct), NumericalError);
    t.data[0] = cplx(1.0, 1e-12);
    const auto r = finalize_real(t, {1, 0}, Assembly::direct);
    EXPECT_NEAR(r.imag_residue, 1e-12, 1e-16);
    EXPECT_EQ(r.tensor.data[0].imag(), 0.0);
}
