#include "degpar/error.hpp"
#include "degpar/suite.hpp"
#include "degpar/verify.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace degpar;

namespace {

CoefficientProfile scalar_a(double a, double T, std::vector<ScalarTerm> c = {}) {
    return CoefficientProfile(1, T, {{constant_basis(), {}, Matrix::Constant(1, 1, a)}}, {}, std::move(c));
}

// delta = 1 on [t0, inf), 0 before
CoefficientProfile late_start(double t0, double T) {
    return CoefficientProfile(1, T, {{constant_basis(), {t0, kInfinity}, Matrix::Constant(1, 1, 1.0)}});
}

std::vector<double> nodes(const TimeGrid& tg) { return tg.nodes(); }

SpaceTimeField heat_forcing(double T, int cells, double variance = 1.0, int n = 64, double L = 12.0) {
    const TimeGrid tg{T, cells};
    return sample(bump_forcing(1, variance), Grid(1, n, L), tg.midpoints());
}

}  // namespace

TEST(LhsSup, Examples) {
    const TimeGrid tg{1.0, 10};
    const auto t = nodes(tg);
    const auto plain = scalar_a(1.0, 1.0);
    EXPECT_EQ(lhs_sup(std::vector<double>(11, 0.0), t, plain, 2.0), 0.0);
    EXPECT_NEAR(lhs_sup(std::vector<double>(11, 2.0), t, plain, 2.0), 4.0, 1e-15);
    const auto growth = scalar_a(1.0, 1.0, {{constant_basis(), {}, 1.0}});
    // norm 2 only at t = 1: 4 e^{-2}
    std::vector<double> last(11, 0.0);
    last.back() = 2.0;
    EXPECT_NEAR(lhs_sup(last, t, growth, 2.0), 4.0 * std::exp(-2.0), 1e-15);
    // constant norm: the factor e^{-2t} peaks at t = 0
    EXPECT_NEAR(lhs_sup(std::vector<double>(11, 2.0), t, growth, 2.0), 4.0, 1e-15);
}

TEST(LhsWeighted, Examples) {
    const TimeGrid tg{1.0, 2000};
    const std::vector<double> unit(2001, 1.0);
    EXPECT_EQ(lhs_weighted(unit, tg, Weight::constant(), scalar_a(0.0, 1.0), 3.0), 0.0);
    const TimeGrid tg3{3.0, 30};
    EXPECT_NEAR(lhs_weighted(std::vector<double>(31, 1.0), tg3, Weight::constant(), scalar_a(1.0, 3.0), 2.5), 3.0, 1e-13);
    // int_0^1 t^{1/2} dt = 2/3; midpoint error O(h^{3/2}) from the root at 0
    EXPECT_NEAR(lhs_weighted(unit, tg, Weight::power(0.5), scalar_a(1.0, 1.0), 2.0), 2.0 / 3.0, 1e-5);
    EXPECT_THROW(lhs_weighted(std::vector<double>(12, 1.0), TimeGrid{1.0, 11}, Weight::constant(), scalar_a(1.0, 1.0), 2.0), Error);
}

TEST(RhsWeighted, ZeroForcingIsConvergentZero) {
    const TimeGrid tg{1.0, 8};
    const auto r = rhs_weighted(std::vector<double>(8, 0.0), tg, Weight::constant(), scalar_a(1.0, 1.0), 2.0,
                                default_eps_schedule());
    EXPECT_EQ(r.status, RhsStatus::convergent);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.trace.size(), 21u);
}

TEST(RhsWeighted, NondegenerateLimitIsPlainIntegral) {
    const TimeGrid tg{2.0, 40};
    std::vector<double> norms(40);
    const auto mids = tg.midpoints();
    for (int k = 0; k < 40; ++k) norms[k] = 1.0 + mids[k];
    const double q = 2.0, kappa = 0.3;
    const auto p = scalar_a(1.0, 2.0, {{constant_basis(), {}, kappa}});
    const auto r = rhs_weighted(norms, tg, Weight::constant(), p, q, default_eps_schedule());
    double oracle = 0.0;
    for (int k = 0; k < 40; ++k) oracle += tg.step() * std::pow(norms[k], q) * std::exp(-q * kappa * mids[k]);
    EXPECT_EQ(r.status, RhsStatus::convergent);
    EXPECT_NEAR(r.value, oracle, 1e-9 * oracle);
    // each trace value: the same sum times (1 + eps)^{1-q}
    for (const auto& s : r.trace) EXPECT_NEAR(s.value, oracle * std::pow(1.0 + s.epsilon, 1.0 - q), 1e-12 * oracle);
}

TEST(RhsWeighted, ForcingInsideDegenerateWindowDiverges) {
    const TimeGrid tg{2.0, 20};
    std::vector<double> norms(20, 0.0);
    const auto mids = tg.midpoints();
    for (int k = 0; k < 20; ++k) norms[k] = mids[k] < 1.0 ? 1.5 : 0.0;
    const auto r = rhs_weighted(norms, tg, Weight::constant(), late_start(1.0, 2.0), 2.0, default_eps_schedule());
    EXPECT_EQ(r.status, RhsStatus::divergent);
    EXPECT_TRUE(std::isinf(r.value));
    // closed form on the window: int_0^1 1.5^2 eps^{-1} dt
    for (const auto& s : r.trace) EXPECT_NEAR(s.value, 2.25 / s.epsilon, 1e-12 * s.value);
}

TEST(Classify, Rules) {
    auto trace = [](std::function<double(double)> g) {
        std::vector<EpsilonSample> out;
        for (double e : default_eps_schedule()) out.push_back({e, g(e)});
        return out;
    };
    // linear in eps: Richardson recovers the limit exactly
    const auto conv = classify(trace([](double e) { return 3.0 + 2.0 * e; }));
    EXPECT_EQ(conv.status, RhsStatus::convergent);
    EXPECT_NEAR(conv.value, 3.0, 1e-12);
    const auto blow = classify(trace([](double e) { return 1.0 / (e * e); }));
    EXPECT_EQ(blow.status, RhsStatus::divergent);
    // log growth: equal increments count as non-decreasing
    EXPECT_EQ(classify(trace([](double e) { return -std::log(e); })).status, RhsStatus::divergent);
    // decays without settling: the last value is reported
    const auto slow = classify(trace([](double e) { return std::pow(e, 0.3); }));
    EXPECT_EQ(slow.status, RhsStatus::indeterminate);
    EXPECT_NEAR(slow.value, std::pow(2.0, -6.0), 1e-15);
    // 1/eps: increments double, so the accelerating rule fires before 1e12
    const auto inv = classify(trace([](double e) { return 1.0 / e; }));
    EXPECT_EQ(inv.status, RhsStatus::divergent);
    EXPECT_EQ(classify({{1.0, 1.0}, {0.5, kInfinity}}).status, RhsStatus::divergent);
}

TEST(Constants, SupConstantUnitWeight) {
    EXPECT_NEAR(sup_constant(Weight::constant(), scalar_a(1.0, 2.5), 2.0), 2.5, 1e-14);
    EXPECT_NEAR(sup_constant(Weight::constant(), scalar_a(1.0, 2.0), 3.0), 4.0, 1e-14);
}

TEST(Constants, SupPowerConstantAnchor) {
    // q = 2, beta = 1/2, delta = 1, T = 1: [(q-1)/(q-1-beta)]^{q-1} [int delta]^{q-1-beta} = 2
    EXPECT_NEAR(sup_power_constant(2.0, 0.5, 1.0), 2.0, 1e-10);
    const auto p = scalar_a(1.0, 1.0);
    EXPECT_NEAR(sup_constant(Weight::power(0.5), p, 2.0), 2.0, 1e-10);
}

TEST(Constants, SupConstantMatchesQuadrature) {
    const auto p = canonical_profile("unbounded", 1.0);
    const double aT = p.alpha(1.0);
    boost::math::quadrature::tanh_sinh<double> ts;
    for (double q : {1.5, 2.0, 3.0}) {
        for (double beta : {-0.4, 0.3}) {
            if (beta >= q - 1.0) continue;
            const double inner = ts.integrate([&](double t) { return std::pow(t, -beta / (q - 1.0)); }, 0.0, aT);
            EXPECT_NEAR(sup_constant(Weight::power(beta), p, q), std::pow(inner, q - 1.0), 1e-9 * std::pow(inner, q - 1.0));
            EXPECT_NEAR(sup_power_constant(q, beta, aT), std::pow(inner, q - 1.0), 1e-9 * std::pow(inner, q - 1.0));
        }
    }
}

TEST(Constants, LqLpAqOfUnitWeight) {
    const auto est = lq_lp_aq(Weight::constant(), scalar_a(1.0, 2.0), 2.0, 8);
    EXPECT_EQ(est.value, 1.0);
}

TEST(Checks, UnitWeightConstantsAndZeroForcing) {
    const double T = 2.0;
    const auto p = scalar_a(1.0, T);
    const auto f0 = heat_forcing(T, 16, 1.0) ;
    SpaceTimeField zero(f0.grid(), f0.times());
    const EstimateContext ctx(p, zero, {2.0});
    const auto sup = check_sup_estimate(ctx, Weight::constant(), 2.0, 2.0);
    EXPECT_TRUE(sup.passed);
    EXPECT_EQ(sup.lhs, 0.0);
    EXPECT_NEAR(*sup.explicit_constant, T, 1e-14);
    const auto lq = check_lq_lp_estimate(ctx, Weight::constant(), 2.0, 3.0);
    EXPECT_TRUE(lq.passed);
    EXPECT_NEAR(*lq.explicit_constant, std::pow(T, 3.0), 1e-12);
    const auto hess = check_hessian_estimate(ctx, Weight::constant(), 2.0, 2.0);
    EXPECT_TRUE(hess.passed);
    EXPECT_EQ(hess.lhs, 0.0);
}

TEST(Checks, HeatEquationGaussianForcing) {
    const auto p = CoefficientProfile(1, 1.0, {{constant_basis(), {}, Matrix::Constant(1, 1, 1.0)}}, {}, {}, "heat");
    const EstimateContext ctx(p, heat_forcing(1.0, 32), {2.0});
    const auto sup = check_sup_estimate(ctx, Weight::constant(), 2.0, 2.0);
    EXPECT_TRUE(sup.passed);
    EXPECT_FALSE(sup.vacuous);
    ASSERT_TRUE(sup.empirical_ratio.has_value());
    EXPECT_LE(*sup.empirical_ratio, 1.0);
    const auto hess = check_hessian_estimate(ctx, Weight::constant(), 2.0, 2.0);
    EXPECT_TRUE(hess.passed);
    ASSERT_TRUE(hess.empirical_ratio.has_value());
    EXPECT_TRUE(std::isfinite(*hess.empirical_ratio));
    EXPECT_FALSE(hess.explicit_constant.has_value());
}

TEST(Checks, PowerWeightOnDegenerateWindow) {
    // forcing only after the window: convergent right-hand side
    const auto window = canonical_profile("window", 3.0);
    const TimeGrid tg{3.0, 48};
    const auto f = sample(bump_forcing(2, 4.0, {2.0, kInfinity}), Grid(2, 64, 40.0), tg.midpoints());
    const EstimateContext ctx(window, f, {2.0});
    const auto reports = check_power_variants(ctx, 2.0, 2.0, 0.5);
    ASSERT_EQ(reports.size(), 3u);
    for (const auto& r : reports) {
        EXPECT_TRUE(r.passed) << to_string(r.id);
        EXPECT_FALSE(r.vacuous) << to_string(r.id);
        EXPECT_EQ(r.rhs_status, RhsStatus::convergent);
    }
    EXPECT_TRUE(check_lq_lp_estimate(ctx, Weight::power(0.5), 2.0, 2.0).passed);
}

TEST(Checks, ForcingInsideWindowIsVacuous) {
    const auto window = canonical_profile("window", 3.0);
    const TimeGrid tg{3.0, 48};
    const auto f = sample(bump_forcing(2, 4.0, {1.0, 2.0}), Grid(2, 64, 40.0), tg.midpoints());
    const EstimateContext ctx(window, f, {2.0}, false);
    const auto r = check_sup_estimate(ctx, Weight::constant(), 2.0, 2.0);
    EXPECT_TRUE(r.passed);
    EXPECT_TRUE(r.vacuous);
    EXPECT_TRUE(std::isinf(r.rhs));
    EXPECT_FALSE(r.empirical_ratio.has_value());
}

TEST(Checks, ZeroBetaPowerVariantsMatchUnitWeight) {
    const auto p = canonical_profile("unbounded", 1.0);
    const auto f = sample(bump_forcing(2, 1.0), Grid(2, 32, 16.0), TimeGrid{1.0, 16}.midpoints());
    const EstimateContext ctx(p, f, {2.0});
    const auto power = check_power_variants(ctx, 2.0, 2.0, 0.0);
    const auto sup = check_sup_estimate(ctx, Weight::constant(), 2.0, 2.0);
    const auto lq = check_lq_lp_estimate(ctx, Weight::constant(), 2.0, 2.0);
    EXPECT_NEAR(power[0].lhs, sup.lhs, 1e-14 * sup.lhs);
    EXPECT_NEAR(power[0].rhs, sup.rhs, 1e-12 * sup.rhs);
    EXPECT_NEAR(*power[0].explicit_constant, *sup.explicit_constant, 1e-12);
    EXPECT_NEAR(power[1].lhs, lq.lhs, 1e-14 * lq.lhs);
    EXPECT_NEAR(*power[1].explicit_constant, *lq.explicit_constant, 1e-12);
    try {
        check_power_variants(ctx, 2.0, 2.0, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::admissibility);
    }
}

TEST(Checks, HolderBoundWithUnitWeights) {
    const auto p = scalar_a(1.0, 1.0);
    const EstimateContext ctx(p, heat_forcing(1.0, 16), {2.0}, false);
    const double q = 2.0;
    auto one = [](double) { return 1.0; };
    const auto r = check_holder_bound(ctx, one, one, 2.0, q);
    // oracle: sum over odd m of 2 dt t_m^{q-1} sum_{k<m} dt |f(s_k)|^q
    const auto& fn = ctx.f_norms(2.0);
    const auto& un = ctx.u_norms(2.0);
    const double dt = 1.0 / 16;
    double lhs = 0.0, rhs = 0.0;
    for (int m = 1; m < 16; m += 2) {
        double inner = 0.0;
        for (int k = 0; k < m; ++k) inner += dt * fn[k] * fn[k];
        rhs += 2 * dt * std::pow(m * dt, q - 1.0) * inner;
        lhs += 2 * dt * un[m] * un[m];
    }
    EXPECT_NEAR(r.lhs, lhs, 1e-13 * lhs);
    EXPECT_NEAR(r.rhs, rhs, 1e-13 * rhs);
    EXPECT_TRUE(r.passed);

    SpaceTimeField zero(ctx.f().grid(), ctx.f().times());
    const EstimateContext empty(p, zero, {2.0}, false);
    const auto z = check_holder_bound(empty, one, one, 2.0, q);
    EXPECT_EQ(z.lhs, 0.0);
    EXPECT_EQ(z.rhs, 0.0);
    EXPECT_TRUE(z.passed);
}

// Properties.

TEST(VerifyProperties, RhsNonIncreasingInEpsForUnitWeight) {
    const TimeGrid tg{3.0, 48};
    const auto f = sample(bump_forcing(2, 4.0), Grid(2, 32, 40.0), tg.midpoints());
    for (const auto& p : canonical_suite(3.0, true)) {
        for (double q : {1.5, 2.0, 3.0}) {
            const auto fn = lp_norms(f, 2.0);
            const auto r = rhs_weighted(fn, tg, Weight::constant(), p, q, default_eps_schedule());
            // trace runs from large to small eps
            for (std::size_t k = 1; k < r.trace.size(); ++k) {
                ASSERT_GE(r.trace[k].value, r.trace[k - 1].value - 1e-10) << p.id() << " q=" << q;
            }
        }
    }
}

TEST(VerifyProperties, ContractionOnCanonicalSuite) {
    const TimeGrid tg{3.0, 24};
    const auto f = sample(bump_forcing(2, 4.0), Grid(2, 128, 24.0), tg.midpoints());
    for (const auto& p : canonical_suite(3.0, true)) {
        const EstimateContext ctx(p, f, {1.0, 2.0, kInfinity}, false);
        for (double q : {1.0, 2.0, kInfinity}) {
            const auto r = lp_contraction(ctx, q);
            ASSERT_TRUE(r.passed) << p.id() << " p=" << q << " lhs " << r.lhs << " rhs " << r.rhs;
        }
    }
}

TEST(VerifyProperties, ScanIsDeterministicAndAttributable) {
    const TimeGrid tg{3.0, 24};
    const auto f = sample(bump_forcing(2, 4.0, {2.0, kInfinity}), Grid(2, 32, 48.0), tg.midpoints());
    std::vector<EstimateContext> suite;
    for (const auto& p : canonical_suite(3.0, false)) suite.emplace_back(p, f, std::vector<double>{2.0, 3.0});
    ScanParameters params;
    params.pq = ScanParameters::product(std::vector<double>{2.0, 3.0}, std::vector<double>{2.0});
    params.betas = {0.0, 0.5};
    const auto a = scan_profiles(suite, params);
    const auto b = scan_profiles(suite, params);
    ASSERT_EQ(a.reports.size(), b.reports.size());
    for (std::size_t i = 0; i < a.reports.size(); ++i) {
        EXPECT_EQ(a.reports[i].id, b.reports[i].id);
        EXPECT_EQ(a.reports[i].parameters.profile, b.reports[i].parameters.profile);
        EXPECT_EQ(a.reports[i].lhs, b.reports[i].lhs);
        EXPECT_EQ(a.reports[i].rhs, b.reports[i].rhs);
        EXPECT_FALSE(to_string(a.reports[i].id).empty());
    }
    EXPECT_EQ(a.failed, 0u);
}
