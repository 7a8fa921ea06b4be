#include "degpar/error.hpp"
#include "degpar/field.hpp"
#include "degpar/suite.hpp"
#include "degpar/verify.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace degpar;
using std::numbers::pi;

namespace {

double gaussian(double r2, double variance, int d) {
    return std::exp(-r2 / (2.0 * variance)) / std::pow(2.0 * pi * variance, 0.5 * d);
}

// Sum over the periodic images within `reach` boxes of an isotropic Gaussian.
double periodic_gaussian(const SpacePoint& x, double variance, const Grid& g, int reach = 3) {
    const double period = 2.0 * g.halfwidth;
    double total = 0.0;
    const int ry = g.dimension >= 2 ? reach : 0;
    for (int i = -reach; i <= reach; ++i) {
        for (int j = -ry; j <= ry; ++j) {
            double r2 = std::pow(x[0] + i * period, 2);
            if (g.dimension >= 2) r2 += std::pow(x[1] + j * period, 2);
            total += gaussian(r2, variance, g.dimension);
        }
    }
    return total;
}

std::vector<double> slice_of(const Grid& g, const std::function<double(const SpacePoint&)>& fn) {
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = fn(g.point(i));
    return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

KernelSpec kernel(const Matrix& sigma, const Vector& shift, double growth = 0.0) {
    KernelSpec k;
    k.sigma = sigma;
    k.shift = shift;
    k.growth = growth;
    return k;
}

CoefficientProfile profile_a(const Matrix& a, double T, std::vector<VectorTerm> b = {}, std::vector<ScalarTerm> c = {}) {
    return CoefficientProfile(static_cast<int>(a.rows()), T, {{constant_basis(), {}, a}}, std::move(b), std::move(c));
}

Forcing centred_bump(int d, double variance, TimeSupport window = {}) {
    return bump_forcing(d, variance, window);
}

}  // namespace

TEST(ApplyKernel, ZeroKernelIsIdentity) {
    const Grid g(2, 32, 4.0);
    const auto in = slice_of(g, [](const SpacePoint& x) { return std::exp(-x[0] * x[0] - 0.5 * x[1] * x[1]) + 0.1 * x[0]; });
    const auto out = apply_kernel(g, in, KernelSpec::identity(2));
    EXPECT_LT(max_abs_diff(in, out), 1e-12);
}

TEST(ApplyKernel, SpikeBecomesPeriodicHeatKernel) {
    const Grid g(2, 64, 8.0);
    const double h = g.spacing();
    std::vector<double> spike(g.size(), 0.0);
    // origin is index n/2 along each axis
    spike[(g.n / 2) * g.n + g.n / 2] = 1.0 / (h * h);
    const double tau = 1.0;
    const auto out = apply_kernel(g, spike, kernel(2.0 * tau * Matrix::Identity(2, 2), Vector::Zero(2)));
    const auto oracle = slice_of(g, [&](const SpacePoint& x) { return periodic_gaussian(x, 2.0 * tau, g); });
    EXPECT_LT(max_abs_diff(out, oracle), 1e-10);
}

TEST(ApplyKernel, DegenerateSigmaSmoothsOneAxisOnly) {
    const Grid g(2, 64, 10.0);
    const double v1 = 0.7, v2 = 0.5, s2 = 1.3;
    const auto in = slice_of(g, [&](const SpacePoint& x) { return gaussian(x[0] * x[0], v1, 1) * gaussian(x[1] * x[1], v2, 1); });
    Matrix sigma = Matrix::Zero(2, 2);
    sigma(0, 0) = s2;
    const auto out = apply_kernel(g, in, kernel(sigma, Vector::Zero(2)));
    // 1-d convolution oracle: N(0, v1) * N(0, s2) = N(0, v1 + s2) along x1,
    // periodized along x1 (the x2 factor is untouched)
    const Grid line(1, 64, 10.0);
    const auto oracle = slice_of(g, [&](const SpacePoint& x) {
        return periodic_gaussian({x[0], 0.0, 0.0}, v1 + s2, line) * gaussian(x[1] * x[1], v2, 1);
    });
    EXPECT_LT(max_abs_diff(out, oracle), 1e-12);
}

TEST(ApplyKernel, ShiftAndGrowth) {
    const Grid g(1, 64, 2.0 * pi);
    const auto in = slice_of(g, [](const SpacePoint& x) { return std::cos(3.0 * x[0]) + std::sin(x[0]); });
    Vector shift(1);
    shift << 0.37;
    const auto out = apply_kernel(g, in, kernel(Matrix::Zero(1, 1), shift, 0.25));
    const auto oracle = slice_of(g, [](const SpacePoint& x) {
        const double y = x[0] + 0.37;
        return std::exp(0.25) * (std::cos(3.0 * y) + std::sin(y));
    });
    EXPECT_LT(max_abs_diff(out, oracle), 1e-12);
}

TEST(ApplyKernel, SemigroupProperty) {
    const Grid g(2, 32, 6.0);
    const auto in = slice_of(g, [](const SpacePoint& x) { return std::exp(-0.5 * (x[0] * x[0] + 2 * x[1] * x[1])) * (1 + x[0]); });
    for (const auto& p : canonical_suite(3.0, true)) {
        const auto k1 = KernelSpec::between(p, 0.2, 1.1);
        const auto k2 = KernelSpec::between(p, 1.1, 2.6);
        const auto two_steps = apply_kernel(g, apply_kernel(g, in, k1), k2);
        const auto one_step = apply_kernel(g, in, KernelSpec::between(p, 0.2, 2.6));
        ASSERT_LT(max_abs_diff(two_steps, one_step), 1e-12) << p.id();
    }
}

TEST(SolveExact, ZeroForcingGivesZero) {
    const Grid g(2, 16, 4.0);
    const TimeGrid tg{1.0, 8};
    const auto f = sample(Forcing(2, {}), g, tg.midpoints());
    const auto u = solve_exact(f, canonical_profile("identity", 1.0));
    EXPECT_EQ(u.n_times(), 9u);
    for (double v : u.values()) EXPECT_EQ(v, 0.0);
}

TEST(SolveExact, VanishingOperatorIntegratesInTime) {
    const Grid g(1, 32, 5.0);
    const TimeGrid tg{2.0, 16};
    ForcingComponent c;
    c.bump.variance = 0.8;
    c.time.exponent = 1.0;
    const Forcing f(1, {c});
    const auto samples = sample(f, g, tg.midpoints());
    const auto u = solve_exact(samples, profile_a(Matrix::Zero(1, 1), 2.0));
    // midpoint rule of s * g(x) is exact for a linear time factor: t^2 / 2 g(x)
    for (std::size_t m = 0; m <= 16; ++m) {
        const double t = tg.step() * m;
        const auto oracle = slice_of(g, [&](const SpacePoint& x) { return 0.5 * t * t * gaussian(x[0] * x[0], 0.8, 1); });
        ASSERT_LT(max_abs_diff(u.slice(m), oracle), 1e-13) << m;
    }
}

TEST(SolveExact, HeatEquationWithGaussianForcing) {
    const Grid g(2, 64, 10.0);
    const double v0 = 0.5, T = 1.0;
    const int M = 64;
    const TimeGrid tg{T, M};
    const auto f = sample(centred_bump(2, v0), g, tg.midpoints());
    const auto u = solve_exact(f, canonical_profile("identity", T));
    const std::size_t probe = (g.n / 2) * g.n + g.n / 2 + 3;
    const SpacePoint x = g.point(probe);
    const double r2 = x[0] * x[0] + x[1] * x[1];
    // the same midpoint sum of closed-form Gaussians: only spatial error remains
    double midpoint = 0.0;
    for (double s : tg.midpoints()) midpoint += tg.step() * gaussian(r2, v0 + 2.0 * (T - s), 2);
    EXPECT_NEAR(u.slice(M)[probe], midpoint, 1e-12);
    // against the time integral itself: second-order midpoint error
    boost::math::quadrature::tanh_sinh<double> ts;
    const double exact = ts.integrate([&](double s) { return gaussian(r2, v0 + 2.0 * (T - s), 2); }, 0.0, T);
    EXPECT_NEAR(u.slice(M)[probe], exact, 1e-4 * exact);
}

TEST(SolveExact, ParallelMatchesSerialReference) {
    const Grid g(2, 32, 12.0);
    const TimeGrid tg{3.0, 12};
    const auto f = sample(centred_bump(2, 2.0), g, tg.midpoints());
    for (const auto& p : canonical_suite(3.0, true)) {
        const auto fast = solve_exact(f, p);
        const auto slow = reference::solve_exact(f, p);
        double scale = 0.0;
        for (double v : slow.values()) scale = std::max(scale, std::abs(v));
        ASSERT_LT(max_abs_diff(fast.values(), slow.values()), 1e-13 * scale) << p.id();
    }
}

TEST(SolveExact, RejectsNonMidpointTimes) {
    const Grid g(1, 16, 4.0);
    const std::vector<double> bad{0.0, 0.5, 1.0};
    const auto f = sample(centred_bump(1, 1.0), g, bad);
    EXPECT_THROW(solve_exact(f, canonical_profile("identity", 1.0).without_lower_order().with_horizon(1.0)), Error);
}

TEST(Hessian, PureModeAndConstant) {
    const Grid g(2, 32, 3.0);
    const double k = pi / g.halfwidth;
    SpaceTimeField u(g, {0.0}, slice_of(g, [&](const SpacePoint& x) { return std::sin(k * x[0]); }));
    const auto hs = hessian(u);
    ASSERT_EQ(hs.size(), 4u);
    const auto oracle = slice_of(g, [&](const SpacePoint& x) { return -k * k * std::sin(k * x[0]); });
    EXPECT_LT(max_abs_diff(hs[0].slice(0), oracle), 1e-12);
    for (int i = 1; i < 4; ++i) {
        for (double v : hs[i].slice(0)) ASSERT_NEAR(v, 0.0, 1e-12);
    }
    SpaceTimeField c(g, {0.0}, std::vector<double>(g.size(), 2.5));
    for (const auto& h : hessian(c)) {
        for (double v : h.slice(0)) ASSERT_NEAR(v, 0.0, 1e-12);
    }
}

TEST(Hessian, MatchesFourthOrderFiniteDifferences) {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> z;
    double previous_error = 0.0;
    for (int n : {32, 64}) {
        const Grid g(2, n, pi);
        // band-limited: modes |k| <= 3 on a 2 pi periodic box
        std::vector<std::array<double, 4>> modes;
        gen.seed(5);
        for (int kx = -3; kx <= 3; ++kx)
            for (int ky = -3; ky <= 3; ++ky) modes.push_back({double(kx), double(ky), z(gen), z(gen)});
        auto fn = [&](double x, double y) {
            double v = 0.0;
            for (const auto& m : modes) v += m[2] * std::cos(m[0] * x + m[1] * y) + m[3] * std::sin(m[0] * x + m[1] * y);
            return v;
        };
        SpaceTimeField u(g, {0.0}, slice_of(g, [&](const SpacePoint& x) { return fn(x[0], x[1]); }));
        const auto hs = hessian(u);
        const double h = g.spacing();
        double err = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const SpacePoint x = g.point(i);
            const auto at = [&](double dx) { return fn(x[0] + dx, x[1]); };
            const double fd = (-at(2 * h) + 16 * at(h) - 30 * at(0) + 16 * at(-h) - at(-2 * h)) / (12 * h * h);
            err = std::max(err, std::abs(hs[0].slice(0)[i] - fd));
        }
        if (previous_error > 0.0) {
            EXPECT_GT(previous_error / err, 12.0);  // ~ 2^4
        }
        previous_error = err;
    }
    EXPECT_LT(previous_error, 0.02);  // n = 64, |H| ~ 1e2
}

TEST(LpNorm, Examples) {
    const Grid g(2, 32, 2.0);
    const auto half = slice_of(g, [](const SpacePoint& x) { return x[0] < 0.0 ? 1.0 : 0.0; });
    EXPECT_NEAR(lp_norm(g, half, 1.0), 16.0 / 2.0, 1e-12);
    std::vector<double> v(g.size(), 0.0);
    v[17] = -3.5;
    v[40] = 2.0;
    EXPECT_EQ(lp_norm(g, v, kInfinity), 3.5);
}

TEST(LpNorm, GaussianL2MatchesClosedForm) {
    for (int d : {1, 2}) {
        const Grid g(d, 128, 8.0);
        const double v0 = 0.6;
        const auto bump = slice_of(g, [&](const SpacePoint& x) {
            return gaussian(x[0] * x[0] + (d > 1 ? x[1] * x[1] : 0.0), v0, d);
        });
        // |G_v|_2^2 = (4 pi v)^{-d/2}
        EXPECT_NEAR(lp_norm(g, bump, 2.0), std::pow(4.0 * pi * v0, -0.25 * d), 1e-10);
    }
}

TEST(Transform, ExamplesAndRoundTrip) {
    const Grid g(2, 32, pi);
    const std::vector<double> times{0.0, 0.5, 1.25};
    std::vector<double> values;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto s = slice_of(g, [](const SpacePoint& x) { return std::cos(2 * x[0] - x[1]) + 0.5 * std::sin(3 * x[0]); });
        values.insert(values.end(), s.begin(), s.end());
    }
    const SpaceTimeField u(g, times, values);

    const auto plain = canonical_profile("identity", 2.0);
    EXPECT_LT(max_abs_diff(transform_reduce(u, plain).values(), u.values()), 1e-15);

    const double kappa = 0.7;
    const auto decay = profile_a(Matrix::Identity(2, 2), 2.0, {}, {{constant_basis(), {}, kappa}});
    const auto scaled = transform_reduce(u, decay);
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            ASSERT_NEAR(scaled.slice(k)[i], std::exp(-kappa * times[k]) * u.slice(k)[i], 1e-14);
        }
    }

    Vector b(2);
    b << 1.0, 0.0;
    const auto drift = profile_a(Matrix::Identity(2, 2), 2.0, {{constant_basis(), {}, b}});
    const auto moved = transform_reduce(u, drift);
    for (std::size_t k = 0; k < times.size(); ++k) {
        // per-mode phase: v(t, x) = u(x - t e1)
        const auto oracle = slice_of(g, [&](const SpacePoint& x) {
            const double y = x[0] - times[k];
            return std::cos(2 * y - x[1]) + 0.5 * std::sin(3 * y);
        });
        ASSERT_LT(max_abs_diff(moved.slice(k), oracle), 1e-12);
    }
    for (const auto& p : canonical_suite(2.0, true)) {
        const auto back = transform_restore(transform_reduce(u, p), p);
        ASSERT_LT(max_abs_diff(back.values(), u.values()), 1e-12) << p.id();
    }
}

// Properties of the solver on the canonical suite.

TEST(FieldProperties, LpContractionWithoutLowerOrder) {
    const Grid g(2, 64, 24.0);
    const TimeGrid tg{3.0, 24};
    const auto f = sample(centred_bump(2, 4.0, {0.0, 1.0}), g, tg.midpoints());
    for (const auto& p : canonical_suite(3.0, false)) {
        const auto u = solve_exact(f, p);
        for (double q : {1.0, 2.0, kInfinity}) {
            const auto fn = lp_norms(f, q);
            double bound = 0.0;
            for (std::size_t m = 0; m <= 24; ++m) {
                if (m > 0) bound += tg.step() * fn[m - 1];
                ASSERT_LE(lp_norm(g, u.slice(m), q), bound + 1e-9) << p.id() << " p=" << q << " m=" << m;
            }
        }
    }
}

TEST(FieldProperties, TransformEquivalence) {
    const Grid g(2, 64, 24.0);
    const TimeGrid tg{3.0, 24};
    const auto f = sample(centred_bump(2, 4.0), g, tg.midpoints());
    for (const auto& p : canonical_suite(3.0, true)) {
        ASSERT_LT(transform_mismatch(p, f), 1e-9) << p.id();
    }
}

TEST(FieldProperties, RecommendedHalfwidthFormula) {
    const auto p = canonical_profile("anisotropic", 2.0);
    // lambda_max(Sigma(0, 2)) = 2 * 4 * 2 = 16
    EXPECT_NEAR(recommended_halfwidth(p, 3.0), 8.0 * 4.0 + 3.0, 1e-12);
    const auto drift = with_lower_order(p, LowerOrder::growth);
    EXPECT_NEAR(recommended_halfwidth(drift, 3.0), 2.0 * std::sqrt(2.0) + 35.0, 1e-12);
}

TEST(FieldIo, RoundTrip) {
    const Grid g(3, 8, 1.5);
    const TimeGrid tg{1.0, 4};
    const auto f = sample(centred_bump(3, 0.3), g, tg.midpoints());
    const auto dir = std::filesystem::temp_directory_path() / "degpar_field_io";
    std::filesystem::create_directories(dir);
    write_field(f, (dir / "f.bin").string(), (dir / "f.json").string());
    const auto back = read_field((dir / "f.bin").string(), (dir / "f.json").string());
    EXPECT_EQ(back.grid(), g);
    EXPECT_EQ(back.times(), f.times());
    EXPECT_EQ(back.values(), f.values());
    EXPECT_EQ(midpoint_time_grid(back).cells, 4);
    EXPECT_THROW(read_field((dir / "missing.bin").string(), (dir / "f.json").string()), Error);
}
