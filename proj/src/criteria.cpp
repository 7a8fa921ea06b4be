#include "degpar/criteria.hpp"

#include "degpar/error.hpp"
#include "degpar/suite.hpp"
#include "degpar/verify.hpp"
#include "degpar/weights.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace degpar {

Resolution Resolution::reduced() {
    Resolution r;
    r.cross_n = 64;
    r.cross_cells = 64;
    r.cross_paths = 10000;
    r.verify_n = 64;
    r.verify_cells = 64;
    r.verify_variance = 64.0;
    r.rescale_n = 64;
    r.rescale_cells = 64;
    r.transform_n = 64;
    r.transform_cells = 64;
    r.split_paths = 10000;
    r.split_cells = 16;
    r.random_weights = 100;
    return r;
}

namespace {

constexpr double kVerifyHorizon = 3.0;

// Off on the degenerate window (1, 2) of the window profile so that every
// suite member has a convergent right-hand side.
Forcing verify_forcing(double variance) {
    ForcingComponent early;
    early.bump.variance = variance;
    early.time.window = {0.0, 1.0};
    ForcingComponent late = early;
    late.time.window = {2.0, kInfinity};
    late.time.exponent = 1.0;
    late.time.scale = 0.5;
    return Forcing(2, {early, late});
}

double suite_halfwidth(const std::vector<CoefficientProfile>& suite, double radius) {
    double L = 0.0;
    for (const auto& profile : suite) L = std::max(L, recommended_halfwidth(profile, radius));
    return std::ceil(L);
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

}  // namespace

CriterionResult solver_cross_validation(const Resolution& res) {
    CriterionResult out{1, "solver cross-validation", false, {}};
    const double T = 1.0;
    const Grid grid(2, res.cross_n, 8.0);
    const Forcing f = bump_forcing(2, 0.5);
    const double h = grid.spacing();
    const std::vector<std::array<double, 2>> points{{0.0, 0.0}, {4 * h, -4 * h}, {-6 * h, 2 * h},
                                                    {8 * h, 8 * h}};
    std::vector<Probe> probes;
    for (int quarter = 1; quarter <= 4; ++quarter) {
        const double t = T * quarter / 4.0;
        for (const auto& x : points) probes.push_back({t, {x[0], x[1], 0.0}});
    }
    std::size_t agree = 0;
    std::size_t total = 0;
    double max_z = 0.0;
    std::ostringstream per;
    std::uint64_t seed = res.seed;
    for (const auto& name : canonical_names()) {
        const auto profile = canonical_profile(name, T);
        const auto rows = cross_validate(profile, f, grid, res.cross_cells, probes, res.cross_paths, seed++);
        std::size_t ok = 0;
        for (const auto& row : rows) {
            ok += row.agree ? 1 : 0;
            max_z = std::max(max_z, row.z);
        }
        agree += ok;
        total += rows.size();
        per << " " << name << "=" << ok << "/" << rows.size();
    }
    out.passed = static_cast<double>(agree) >= 0.95 * static_cast<double>(total);
    out.detail = std::to_string(agree) + "/" + std::to_string(total) +
                 " probes within 3 SE, max z " + fmt(max_z) + ";" + per.str();
    return out;
}

CriterionResult lp_contraction_suite(const Resolution& res) {
    CriterionResult out{2, "L_p contraction", true, {}};
    const auto suite = canonical_suite(kVerifyHorizon, false);
    const Forcing f = verify_forcing(res.verify_variance);
    const Grid grid(2, res.verify_n, suite_halfwidth(suite, f.support_radius()));
    const TimeGrid tg{kVerifyHorizon, res.verify_cells};
    const auto field = sample(f, grid, tg.midpoints());
    const std::vector<double> ps{1.0, 2.0, kInfinity};
    std::size_t checks = 0;
    double worst = kInfinity;
    for (const auto& profile : suite) {
        const EstimateContext ctx(profile, field, ps, false);
        for (double p : ps) {
            const auto report = lp_contraction(ctx, p);
            ++checks;
            worst = std::min(worst, report.rhs + kContractionSlack - report.lhs);
            if (!report.passed) {
                out.passed = false;
                out.detail += " FAIL " + profile.id() + " p=" + fmt(p);
            }
        }
    }
    out.detail = std::to_string(checks) + " (profile, p) pairs, smallest margin " + fmt(worst) + out.detail;
    return out;
}

CriterionResult explicit_constant_suite(const Resolution& res) {
    CriterionResult out{3, "explicit-constant estimates", true, {}};
    const auto suite_profiles = canonical_suite(kVerifyHorizon, true);
    const Forcing f = verify_forcing(res.verify_variance);
    const Grid grid(2, res.verify_n, suite_halfwidth(suite_profiles, f.support_radius()));
    const TimeGrid tg{kVerifyHorizon, res.verify_cells};
    const auto field = sample(f, grid, tg.midpoints());
    std::vector<EstimateContext> suite;
    for (const auto& profile : suite_profiles) suite.emplace_back(profile, field, std::vector<double>{2.0, 3.0}, false);

    const std::vector<std::pair<double, double>> pq{{2.0, 2.0}, {2.0, 3.0}, {3.0, 2.0}};
    std::size_t checks = 0;
    std::size_t vacuous = 0;
    double max_ratio = 0.0;
    for (double beta : {0.0, 0.5, -0.5}) {
        const Weight w = beta == 0.0 ? Weight::constant() : Weight::power(beta);
        for (const auto& ctx : suite) {
            for (const auto& [p, q] : pq) {
                std::vector<EstimateReport> reports{check_sup_estimate(ctx, w, p, q),
                                                    check_lq_lp_estimate(ctx, w, p, q)};
                for (auto& r : check_power_variants(ctx, p, q, beta)) {
                    if (r.id != EstimateId::hessian_power) reports.push_back(std::move(r));
                }
                for (const auto& r : reports) {
                    ++checks;
                    vacuous += r.vacuous ? 1 : 0;
                    if (r.empirical_ratio) max_ratio = std::max(max_ratio, *r.empirical_ratio);
                    if (!r.passed) {
                        out.passed = false;
                        out.detail += " FAIL " + std::string(to_string(r.id)) + " " + ctx.profile().id() +
                                      " p=" + fmt(p) + " q=" + fmt(q) + " beta=" + fmt(beta) +
                                      " ratio=" + fmt(r.empirical_ratio.value_or(kInfinity));
                    }
                }
            }
        }
    }
    out.detail = std::to_string(checks) + " checks (" + std::to_string(vacuous) +
                 " vacuous), max lhs/(C rhs) " + fmt(max_ratio) + out.detail;
    return out;
}

CriterionResult sup_constant_anchor(const Resolution&) {
    CriterionResult out{4, "sup constant anchor", false, {}};
    const CoefficientProfile unit(1, 1.0, {MatrixTerm{constant_basis(), {}, Matrix::Identity(1, 1)}});
    const double closed = sup_power_constant(2.0, 0.5, unit.alpha(1.0));
    const double swept = sup_constant(Weight::power(0.5), unit, 2.0);
    const double err = std::max(std::abs(closed - 2.0), std::abs(swept - 2.0));
    out.passed = err < 1e-10;
    std::ostringstream d;
    d.precision(17);
    d << "closed form " << closed << ", weight integral " << swept << ", |err| " << err;
    out.detail = d.str();
    return out;
}

CriterionResult improper_dichotomy(const Resolution& res) {
    CriterionResult out{5, "improper-integral dichotomy", true, {}};
    const auto profile = canonical_profile("window", kVerifyHorizon);
    const std::vector<CoefficientProfile> one{profile};
    const double variance = res.verify_variance;
    const Grid grid(2, res.verify_n, suite_halfwidth(one, 8.0 * std::sqrt(variance)));
    const TimeGrid tg{kVerifyHorizon, res.verify_cells};

    std::ostringstream d;
    for (int inside = 1; inside >= 0; --inside) {
        const TimeSupport window = inside ? TimeSupport{1.0, 2.0} : TimeSupport{2.0, kInfinity};
        const auto field = sample(bump_forcing(2, variance, window), grid, tg.midpoints());
        const EstimateContext ctx(profile, field, {2.0}, false);
        for (const auto& r : {check_sup_estimate(ctx, Weight::constant(), 2.0, 2.0),
                              check_lq_lp_estimate(ctx, Weight::constant(), 2.0, 2.0)}) {
            bool ok = r.passed;
            if (inside) {
                ok = ok && r.rhs_status == RhsStatus::divergent && r.vacuous;
            } else {
                const auto& tr = r.epsilon_trace;
                const std::size_t n = tr.size();
                const double c1 = std::abs(tr[n - 1].value - tr[n - 2].value) / tr[n - 1].value;
                const double c2 = std::abs(tr[n - 2].value - tr[n - 3].value) / tr[n - 2].value;
                ok = ok && r.rhs_status == RhsStatus::convergent && !r.vacuous && c1 < 1e-3 && c2 < 1e-3;
                if (r.id == EstimateId::sup_estimate) d << "; outside (last eps changes " << fmt(c1) << ", " << fmt(c2) << "): ";
            }
            d << (r.id == EstimateId::sup_estimate ? (inside ? "inside: " : "") : ", ")
              << to_string(r.id) << " " << to_string(r.rhs_status) << (r.vacuous ? " (vacuous)" : "")
              << (r.passed ? " pass" : " fail");
            out.passed = out.passed && ok;
        }
    }
    out.detail = d.str();
    return out;
}

CriterionResult rescaling_invariance(const Resolution& res) {
    CriterionResult out{6, "time-rescaling invariance", true, {}};
    const Grid grid(2, res.rescale_n, 8.0);
    const Forcing g = bump_forcing(2, 0.5);
    const std::vector<double> lambdas{0.5, 1.0, 2.0, 10.0};
    std::ostringstream d;
    for (const char* name : {"identity", "anisotropic", "rotating"}) {
        const auto base = canonical_profile(name, 1.0);
        const auto table = scan_rescaling(base, g, grid, res.rescale_cells, lambdas, 2.0, 2.0);
        out.passed = out.passed && table.spread < 0.02;
        d << name << " spread " << fmt(100.0 * table.spread) << "%; ";
    }
    out.detail = d.str();
    return out;
}

CriterionResult splitting_law(const Resolution& res) {
    CriterionResult out{7, "splitting law", true, {}};
    const TimeGrid tg{kVerifyHorizon, res.split_cells};
    const auto times = tg.nodes();
    double max_z = 0.0;
    std::ostringstream d;
    std::uint64_t seed = res.seed + 100;
    for (const auto& name : canonical_names()) {
        const auto profile = canonical_profile(name, kVerifyHorizon);
        const auto rows = split_law(profile, std::nullopt, times, res.split_paths, seed++);
        double z = 0.0;
        for (const auto& row : rows) z = std::max(z, row.z);
        max_z = std::max(max_z, z);
        out.passed = out.passed && z <= 4.0;
        d << name << " (floor " << fmt(profile.min_delta()) << ") max z " << fmt(z) << "; ";
    }
    out.detail = d.str();
    return out;
}

CriterionResult transform_equivalence(const Resolution& res) {
    CriterionResult out{8, "transform equivalence", true, {}};
    Vector b(2);
    b << 1.0, -1.0;
    const std::vector<std::pair<std::string, ScalarTerm>> cs{
        {"c=1", ScalarTerm{constant_basis(), {}, 1.0}},
        {"c=-1", ScalarTerm{constant_basis(), {}, -1.0}},
        {"c=t^-1/2", ScalarTerm{power_basis(-0.5), {}, 1.0}},
    };
    const double T = kVerifyHorizon;
    const TimeGrid tg{T, res.transform_cells};
    const Grid grid(2, res.transform_n, 12.0);
    const auto field = sample(bump_forcing(2, 1.0), grid, tg.midpoints());
    double worst = 0.0;
    for (const auto& name : canonical_names()) {
        for (const auto& [label, c] : cs) {
            const auto profile = canonical_profile(name, T).with_lower_order(
                {VectorTerm{constant_basis(), {}, b}}, {c}, name + "+" + label);
            const double mismatch = transform_mismatch(profile, field);
            worst = std::max(worst, mismatch);
            if (!(mismatch < 1e-9)) {
                out.passed = false;
                out.detail += " FAIL " + profile.id() + " " + fmt(mismatch);
            }
        }
    }
    out.detail = "15 profiles, max relative L_inf mismatch " + fmt(worst) + out.detail;
    return out;
}

CriterionResult weight_checks(const Resolution& res) {
    CriterionResult out{9, "weight module", true, {}};
    std::ostringstream d;
    for (double q : {1.5, 2.0, 3.0}) {
        const auto aq = aq_constant(Weight::constant(), q, -1.0, 1.0, 10);
        if (aq.value != 1.0 || aq.divergent) {
            out.passed = false;
            d << "aq(1) != 1 at q=" << q << "; ";
        }
    }
    std::size_t rejected = 0;
    std::size_t flagged = 0;
    std::size_t outside = 0;
    for (double q : {1.5, 2.0, 3.0}) {
        for (double beta : {q - 1.0, q - 1.0 + 0.1, q + 1.0, -1.0, -1.2}) {
            ++outside;
            try {
                check_power_admissible(beta, q);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::admissibility) ++rejected;
            }
            if (aq_constant(Weight::power(beta), q, -1.0, 1.0, 8).divergent) ++flagged;
        }
    }
    if (rejected != outside || flagged != outside) out.passed = false;
    d << "aq(1) = 1 exactly; " << rejected << "/" << outside << " outside betas rejected, " << flagged
      << "/" << outside << " flag divergence; ";

    std::mt19937_64 rng(res.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t monotone = 0;
    for (int i = 0; i < res.random_weights; ++i) {
        const double q = 1.2 + 2.8 * unit(rng);
        const double beta = -1.0 + (q - 1.0 + 1.0) * (0.02 + 0.96 * unit(rng));
        const double a = -2.0 * unit(rng);
        const double b = a + 0.1 + 3.0 * unit(rng);
        const Weight w = Weight::power(beta, 0.1 + 5.0 * unit(rng));
        bool ok = true;
        double prev = 0.0;
        for (int levels = 1; levels <= 10; ++levels) {
            const double v = aq_constant(w, q, a, b, levels).value;
            ok = ok && v >= prev - 1e-12 && v >= 1.0 - 1e-12;
            prev = v;
        }
        monotone += ok ? 1 : 0;
    }
    if (monotone != static_cast<std::size_t>(res.random_weights)) out.passed = false;
    d << monotone << "/" << res.random_weights << " random power weights refine monotonically";
    out.detail = d.str();
    return out;
}

std::vector<CriterionResult> run_criteria(const Resolution& res, std::span<const int> which) {
    using Fn = CriterionResult (*)(const Resolution&);
    static constexpr Fn table[kCriterionCount] = {
        solver_cross_validation, lp_contraction_suite, explicit_constant_suite,
        sup_constant_anchor,     improper_dichotomy,   rescaling_invariance,
        splitting_law,           transform_equivalence, weight_checks,
    };
    std::vector<int> order(which.begin(), which.end());
    if (order.empty()) {
        for (int i = 1; i <= kCriterionCount; ++i) order.push_back(i);
    }
    std::vector<CriterionResult> out;
    for (int number : order) {
        if (number < 1 || number > kCriterionCount) {
            throw Error(ErrorKind::invalid_argument, "no criterion " + std::to_string(number));
        }
        try {
            out.push_back(table[number - 1](res));
        } catch (const std::exception& e) {
            CriterionResult failed;
            failed.number = number;
            failed.name = "criterion " + std::to_string(number);
            failed.detail = std::string("exception: ") + e.what();
            out.push_back(failed);
        }
    }
    return out;
}

}  // namespace degpar
