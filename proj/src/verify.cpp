#include "degpar/verify.hpp"

#include "degpar/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace degpar {

std::string_view to_string(EstimateId id) noexcept {
    switch (id) {
        case EstimateId::sup_estimate: return "sup_estimate";
        case EstimateId::lq_lp_estimate: return "lq_lp_estimate";
        case EstimateId::hessian_estimate: return "hessian_estimate";
        case EstimateId::sup_power: return "sup_power";
        case EstimateId::lq_lp_power: return "lq_lp_power";
        case EstimateId::hessian_power: return "hessian_power";
        case EstimateId::lp_contraction: return "lp_contraction";
        case EstimateId::holder_bound: return "holder_bound";
    }
    return "unknown";
}

std::string_view to_string(RhsStatus status) noexcept {
    switch (status) {
        case RhsStatus::convergent: return "convergent";
        case RhsStatus::divergent: return "divergent";
        case RhsStatus::indeterminate: return "indeterminate";
    }
    return "unknown";
}

std::vector<double> default_eps_schedule() {
    std::vector<double> eps;
    for (int k = 0; k <= 20; ++k) eps.push_back(std::ldexp(1.0, -k));
    return eps;
}

namespace {

double growth_factor(const CoefficientProfile& profile, double t, double q) {
    return std::exp(-q * profile.integral_scalar(0.0, t));
}

void check_q(double q) {
    if (!(q > 1.0) || !std::isfinite(q)) throw Error(ErrorKind::invalid_argument, "q must lie in (1, inf)");
}

void check_p(double p) {
    if (!(p >= 1.0)) throw Error(ErrorKind::invalid_argument, "p must lie in [1, inf]");
}

EstimateParameters parameters_of(const EstimateContext& ctx, double p, double q, const Weight& w,
                                 std::optional<double> beta) {
    EstimateParameters out;
    out.p = p;
    out.q = q;
    out.beta_w = beta;
    out.weight = w.describe();
    out.horizon = ctx.profile().horizon();
    out.profile = ctx.profile().id();
    return out;
}

// Shared pass logic for checks with an explicit constant.
void conclude(EstimateReport& report, double lhs, const RhsResult& rhs, double constant,
              double tolerance) {
    report.lhs = lhs;
    report.rhs_status = rhs.status;
    report.epsilon_trace = rhs.trace;
    report.explicit_constant = constant;
    if (rhs.status == RhsStatus::divergent) {
        report.rhs = kInfinity;
        report.vacuous = true;
        report.passed = std::isfinite(lhs);
        report.note = "rhs diverges; holds vacuously";
        return;
    }
    report.rhs = rhs.value;
    const double bound = constant * rhs.value;
    if (std::isfinite(bound) && bound > 0.0) report.empirical_ratio = lhs / bound;
    if (lhs == 0.0) report.empirical_ratio = 0.0;
    report.passed = std::isfinite(lhs) && lhs <= (1.0 + tolerance) * bound;
    if (rhs.status == RhsStatus::indeterminate) report.note = "rhs indeterminate; compared at smallest eps";
}

// Pass logic for the hessian checks, whose constant is not explicit.
void conclude_ratio(EstimateReport& report, double lhs, const RhsResult& rhs) {
    report.lhs = lhs;
    report.rhs_status = rhs.status;
    report.epsilon_trace = rhs.trace;
    if (rhs.status == RhsStatus::divergent) {
        report.rhs = kInfinity;
        report.vacuous = true;
        report.passed = std::isfinite(lhs);
        report.note = "rhs diverges; holds vacuously";
        return;
    }
    report.rhs = rhs.value;
    if (lhs == 0.0) {
        report.empirical_ratio = 0.0;
    } else if (rhs.value > 0.0) {
        report.empirical_ratio = lhs / rhs.value;
    }
    report.passed = report.empirical_ratio.has_value() && std::isfinite(*report.empirical_ratio);
    if (rhs.status == RhsStatus::indeterminate) report.note = "rhs indeterminate; ratio at smallest eps";
}

}  // namespace

double lhs_sup(std::span<const double> node_norms, std::span<const double> node_times,
               const CoefficientProfile& profile, double q) {
    check_q(q);
    if (node_norms.size() != node_times.size()) {
        throw Error(ErrorKind::invalid_argument, "norms and times differ in length");
    }
    double best = 0.0;
    for (std::size_t m = 0; m < node_norms.size(); ++m) {
        if (node_norms[m] == 0.0) continue;
        best = std::max(best, std::pow(node_norms[m], q) * growth_factor(profile, node_times[m], q));
    }
    return best;
}

double lhs_sup(const SpaceTimeField& u, const CoefficientProfile& profile, double p, double q) {
    check_p(p);
    const auto norms = lp_norms(u, p);
    return lhs_sup(norms, u.times(), profile, q);
}

double lhs_weighted(std::span<const double> node_norms, const TimeGrid& grid, const Weight& w,
                    const CoefficientProfile& profile, double q) {
    check_q(q);
    if (grid.cells % 2 != 0) throw Error(ErrorKind::invalid_argument, "lhs_weighted needs an even cell count");
    if (node_norms.size() != static_cast<std::size_t>(grid.cells) + 1) {
        throw Error(ErrorKind::invalid_argument, "expected one norm per node");
    }
    const double width = 2.0 * grid.step();
    double total = 0.0;
    for (int j = 0; 2 * j + 1 < grid.cells; ++j) {
        const int m = 2 * j + 1;
        const double n = node_norms[static_cast<std::size_t>(m)];
        const double t = m * grid.step();
        const double delta = profile.delta_of(t);
        if (n == 0.0 || delta == 0.0) continue;
        total += width * std::pow(n, q) * growth_factor(profile, t, q) *
                 w(profile.alpha(t)) * delta;
    }
    return total;
}

RhsResult classify(std::vector<EpsilonSample> trace, const RhsCriteria& criteria) {
    RhsResult out;
    out.trace = std::move(trace);
    const auto& tr = out.trace;
    const std::size_t n = tr.size();
    if (n == 0) throw Error(ErrorKind::invalid_argument, "empty eps trace");

    bool any_infinite = false;
    bool all_zero = true;
    for (const auto& s : tr) {
        any_infinite = any_infinite || !std::isfinite(s.value);
        all_zero = all_zero && s.value == 0.0;
    }
    if (all_zero) {
        out.status = RhsStatus::convergent;
        out.value = 0.0;
        return out;
    }
    if (any_infinite) {
        out.status = RhsStatus::divergent;
        out.value = kInfinity;
        return out;
    }

    bool increasing = true;
    for (std::size_t k = 1; k < n; ++k) increasing = increasing && tr[k].value >= tr[k - 1].value;
    if (increasing) {
        const bool grew = tr.front().value > 0.0 &&
                          tr.back().value > criteria.divergence_growth * tr.front().value;
        bool accelerating = false;
        const auto window = static_cast<std::size_t>(std::max(criteria.divergence_window, 1));
        if (n >= window + 2) {
            accelerating = true;
            for (std::size_t k = n - window; k < n; ++k) {
                const double inc = tr[k].value - tr[k - 1].value;
                const double prev = tr[k - 1].value - tr[k - 2].value;
                accelerating = accelerating && inc > 0.0 && inc >= prev;
            }
        }
        if (grew || accelerating) {
            out.status = RhsStatus::divergent;
            out.value = kInfinity;
            return out;
        }
    }

    auto relative_change = [&](std::size_t k) {
        const double scale = std::max(std::abs(tr[k].value), std::abs(tr[k - 1].value));
        return scale == 0.0 ? 0.0 : std::abs(tr[k].value - tr[k - 1].value) / scale;
    };
    if (n >= 3 && relative_change(n - 1) < criteria.convergence_relative &&
        relative_change(n - 2) < criteria.convergence_relative) {
        const double r = tr[n - 2].epsilon / tr[n - 1].epsilon;
        out.status = RhsStatus::convergent;
        out.value = (r * tr[n - 1].value - tr[n - 2].value) / (r - 1.0);
        return out;
    }
    out.status = RhsStatus::indeterminate;
    out.value = tr.back().value;
    return out;
}

RhsResult rhs_weighted(std::span<const double> midpoint_norms, const TimeGrid& grid,
                       const Weight& w, const CoefficientProfile& profile, double q,
                       std::span<const double> eps_schedule, const RhsCriteria& criteria) {
    check_q(q);
    if (midpoint_norms.size() != static_cast<std::size_t>(grid.cells)) {
        throw Error(ErrorKind::invalid_argument, "expected one norm per midpoint");
    }
    if (eps_schedule.empty()) throw Error(ErrorKind::invalid_argument, "empty eps schedule");
    for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
        if (!(eps_schedule[k] > 0.0) || (k > 0 && !(eps_schedule[k] < eps_schedule[k - 1]))) {
            throw Error(ErrorKind::invalid_argument, "eps schedule must be positive and strictly decreasing");
        }
    }
    struct Node {
        double s, base, alpha, delta;
    };
    std::vector<Node> nodes;
    const auto mids = grid.midpoints();
    for (std::size_t k = 0; k < mids.size(); ++k) {
        const double n = midpoint_norms[k];
        if (n == 0.0) continue;
        nodes.push_back({mids[k], grid.step() * std::pow(n, q) * growth_factor(profile, mids[k], q),
                         profile.alpha(mids[k]), profile.delta_of(mids[k])});
    }
    std::vector<EpsilonSample> trace;
    for (double eps : eps_schedule) {
        double total = 0.0;
        for (const auto& node : nodes) {
            total += node.base * w(node.alpha + eps * node.s) * std::pow(node.delta + eps, 1.0 - q);
        }
        trace.push_back({eps, total});
    }
    return classify(std::move(trace), criteria);
}

double sup_constant(const Weight& w, const CoefficientProfile& profile, double q) {
    check_q(q);
    const double alpha_T = profile.alpha(profile.horizon());
    if (alpha_T == 0.0) return 0.0;
    return std::pow(w.integral(0.0, alpha_T, -1.0 / (q - 1.0)), q - 1.0);
}

double sup_power_constant(double q, double beta, double alpha_T) {
    check_power_admissible(beta, q);
    return std::pow((q - 1.0) / (q - 1.0 - beta), q - 1.0) * std::pow(alpha_T, q - 1.0 - beta);
}

AqEstimate lq_lp_aq(const Weight& w, const CoefficientProfile& profile, double q, int levels) {
    const double alpha_T = profile.alpha(profile.horizon());
    const double half = alpha_T > 0.0 ? alpha_T : 1.0;
    return aq_constant(w, q, -half, half, levels);
}

EstimateContext::EstimateContext(CoefficientProfile profile, SpaceTimeField f,
                                 std::vector<double> ps, bool with_hessian)
    : profile_(std::move(profile)), f_(std::move(f)) {
    u_ = solve_exact(f_, profile_);
    time_grid_ = midpoint_time_grid(f_);
    precompute(ps, with_hessian);
}

EstimateContext::EstimateContext(CoefficientProfile profile, SpaceTimeField f, SpaceTimeField u,
                                 std::vector<double> ps, bool with_hessian)
    : profile_(std::move(profile)), f_(std::move(f)), u_(std::move(u)) {
    time_grid_ = midpoint_time_grid(f_);
    if (u_.n_times() != static_cast<std::size_t>(time_grid_.cells) + 1 || !(u_.grid() == f_.grid())) {
        throw Error(ErrorKind::invalid_argument, "u must live on the nodes of f's time grid");
    }
    precompute(ps, with_hessian);
}

void EstimateContext::precompute(const std::vector<double>& ps, bool with_hessian) {
    if (ps.empty()) throw Error(ErrorKind::invalid_argument, "no exponents to precompute");
    std::optional<SpaceTimeField> hess;
    if (with_hessian) hess = hessian_frobenius(u_);
    for (double p : ps) {
        check_p(p);
        f_norms_[p] = lp_norms(f_, p);
        u_norms_[p] = lp_norms(u_, p);
        if (hess) hessian_norms_[p] = lp_norms(*hess, p);
    }
}

namespace {
const std::vector<double>& lookup(const std::map<double, std::vector<double>>& cache, double p,
                                  const char* what) {
    const auto it = cache.find(p);
    if (it == cache.end()) {
        std::ostringstream msg;
        msg << what << " norms for p = " << p << " were not precomputed";
        throw Error(ErrorKind::invalid_argument, msg.str());
    }
    return it->second;
}
}  // namespace

const std::vector<double>& EstimateContext::f_norms(double p) const { return lookup(f_norms_, p, "f"); }
const std::vector<double>& EstimateContext::u_norms(double p) const { return lookup(u_norms_, p, "u"); }
const std::vector<double>& EstimateContext::hessian_norms(double p) const {
    return lookup(hessian_norms_, p, "hessian");
}

EstimateReport check_sup_estimate(const EstimateContext& ctx, const Weight& w, double p, double q,
                                  const CheckOptions& options) {
    EstimateReport report;
    report.id = EstimateId::sup_estimate;
    report.parameters = parameters_of(ctx, p, q, w, std::nullopt);
    const double lhs = lhs_sup(ctx.u_norms(p), ctx.u().times(), ctx.profile(), q);
    const auto rhs = rhs_weighted(ctx.f_norms(p), ctx.time_grid(), w, ctx.profile(), q,
                                  options.eps_schedule, options.criteria);
    conclude(report, lhs, rhs, sup_constant(w, ctx.profile(), q), options.tolerance);
    return report;
}

EstimateReport check_lq_lp_estimate(const EstimateContext& ctx, const Weight& w, double p,
                                    double q, const CheckOptions& options) {
    EstimateReport report;
    report.id = EstimateId::lq_lp_estimate;
    report.parameters = parameters_of(ctx, p, q, w, std::nullopt);
    const double lhs = lhs_weighted(ctx.u_norms(p), ctx.time_grid(), w, ctx.profile(), q);
    const auto rhs = rhs_weighted(ctx.f_norms(p), ctx.time_grid(), w, ctx.profile(), q,
                                  options.eps_schedule, options.criteria);
    const auto aq = lq_lp_aq(w, ctx.profile(), q, options.aq_levels);
    const double alpha_T = ctx.profile().alpha(ctx.profile().horizon());
    conclude(report, lhs, rhs, aq.value * std::pow(alpha_T, q), options.tolerance);
    if (aq.divergent) report.note = "weight is not in A_q (sweep diverged)";
    return report;
}

EstimateReport check_hessian_estimate(const EstimateContext& ctx, const Weight& w, double p,
                                      double q, const CheckOptions& options) {
    EstimateReport report;
    report.id = EstimateId::hessian_estimate;
    report.parameters = parameters_of(ctx, p, q, w, std::nullopt);
    const double lhs = lhs_weighted(ctx.hessian_norms(p), ctx.time_grid(), w, ctx.profile(), q);
    const auto rhs = rhs_weighted(ctx.f_norms(p), ctx.time_grid(), w, ctx.profile(), q,
                                  options.eps_schedule, options.criteria);
    conclude_ratio(report, lhs, rhs);
    return report;
}

std::vector<EstimateReport> check_power_variants(const EstimateContext& ctx, double p, double q,
                                                 double beta, const CheckOptions& options) {
    check_power_admissible(beta, q);
    const Weight w = Weight::power(beta);
    const double alpha_T = ctx.profile().alpha(ctx.profile().horizon());
    const auto rhs = rhs_weighted(ctx.f_norms(p), ctx.time_grid(), w, ctx.profile(), q,
                                  options.eps_schedule, options.criteria);
    std::vector<EstimateReport> out(ctx.has_hessian() ? 3 : 2);

    out[0].id = EstimateId::sup_power;
    out[0].parameters = parameters_of(ctx, p, q, w, beta);
    conclude(out[0], lhs_sup(ctx.u_norms(p), ctx.u().times(), ctx.profile(), q), rhs,
             sup_power_constant(q, beta, alpha_T), options.tolerance);

    out[1].id = EstimateId::lq_lp_power;
    out[1].parameters = out[0].parameters;
    const auto aq = lq_lp_aq(w, ctx.profile(), q, options.aq_levels);
    conclude(out[1], lhs_weighted(ctx.u_norms(p), ctx.time_grid(), w, ctx.profile(), q), rhs,
             aq.value * std::pow(alpha_T, q), options.tolerance);

    if (!ctx.has_hessian()) return out;
    out[2].id = EstimateId::hessian_power;
    out[2].parameters = out[0].parameters;
    conclude_ratio(out[2], lhs_weighted(ctx.hessian_norms(p), ctx.time_grid(), w, ctx.profile(), q),
                   rhs);
    return out;
}

EstimateReport check_holder_bound(const EstimateContext& ctx, const TimeFunction& h1,
                                  const TimeFunction& h2, double p, double q,
                                  const CheckOptions& options) {
    check_q(q);
    const auto& grid = ctx.time_grid();
    if (grid.cells % 2 != 0) throw Error(ErrorKind::invalid_argument, "holder bound needs an even cell count");
    const auto& profile = ctx.profile();
    const auto& un = ctx.u_norms(p);
    const auto& fn = ctx.f_norms(p);
    const auto mids = grid.midpoints();
    const double dt = grid.step();

    // prefix sums over s_k < t_m of the two inner integrals
    std::vector<double> dual(mids.size() + 1, 0.0);
    std::vector<double> forcing(mids.size() + 1, 0.0);
    for (std::size_t k = 0; k < mids.size(); ++k) {
        const double h = h2(mids[k]);
        dual[k + 1] = dual[k] + dt * std::pow(h, -1.0 / (q - 1.0));
        const double g = fn[k] == 0.0 ? 0.0 : dt * std::pow(fn[k], q) * growth_factor(profile, mids[k], q) * h;
        forcing[k + 1] = forcing[k] + g;
    }
    double lhs = 0.0;
    double rhs = 0.0;
    for (int m = 1; m < grid.cells; m += 2) {
        const double t = m * dt;
        const double weight = h1(t);
        const auto um = static_cast<std::size_t>(m);
        if (un[um] != 0.0) lhs += 2.0 * dt * std::pow(un[um], q) * growth_factor(profile, t, q) * weight;
        if (forcing[um] != 0.0) rhs += 2.0 * dt * weight * std::pow(dual[um], q - 1.0) * forcing[um];
    }
    EstimateReport report;
    report.id = EstimateId::holder_bound;
    report.parameters.p = p;
    report.parameters.q = q;
    report.parameters.weight = "h1,h2";
    report.parameters.horizon = profile.horizon();
    report.parameters.profile = profile.id();
    report.lhs = lhs;
    report.rhs = rhs;
    report.explicit_constant = 1.0;
    if (lhs == 0.0) {
        report.empirical_ratio = 0.0;
    } else if (rhs > 0.0 && std::isfinite(rhs)) {
        report.empirical_ratio = lhs / rhs;
    }
    report.passed = std::isfinite(lhs) && lhs <= (1.0 + options.tolerance) * rhs;
    return report;
}

EstimateReport lp_contraction(const EstimateContext& ctx, double p, double q) {
    const auto& grid = ctx.time_grid();
    const auto& profile = ctx.profile();
    const auto& un = ctx.u_norms(p);
    const auto& fn = ctx.f_norms(p);
    const auto mids = grid.midpoints();
    const auto nodes = grid.nodes();
    EstimateReport report;
    report.id = EstimateId::lp_contraction;
    report.parameters.p = p;
    report.parameters.q = q;
    report.parameters.weight = "none";
    report.parameters.horizon = profile.horizon();
    report.parameters.profile = profile.id();
    report.explicit_constant = 1.0;
    report.passed = true;
    double worst = kInfinity;
    for (std::size_t m = 0; m < nodes.size(); ++m) {
        double bound = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (fn[k] != 0.0) bound += grid.step() * std::exp(profile.integral_scalar(mids[k], nodes[m])) * fn[k];
        }
        const double margin = bound + kContractionSlack - un[m];
        if (!(margin >= 0.0)) report.passed = false;
        if (margin < worst) {
            worst = margin;
            report.lhs = un[m];
            report.rhs = bound;
        }
    }
    if (report.lhs == 0.0) {
        report.empirical_ratio = 0.0;
    } else if (report.rhs > 0.0) {
        report.empirical_ratio = report.lhs / report.rhs;
    }
    return report;
}

std::vector<std::pair<double, double>> ScanParameters::product(std::span<const double> ps,
                                                               std::span<const double> qs) {
    std::vector<std::pair<double, double>> out;
    for (double p : ps) {
        for (double q : qs) out.emplace_back(p, q);
    }
    return out;
}

ScanSummary scan_profiles(std::span<const EstimateContext> suite, const ScanParameters& params) {
    const Weight generic = params.weight.value_or(Weight::constant());
    for (const auto& [p, q] : params.pq) {
        for (double beta : params.betas) check_power_admissible(beta, q);
    }
    // one task per (context, (p, q), check group); each writes its own slots
    struct Task {
        std::size_t ctx;
        std::size_t pq;
        int group;  // 0 generic, 1 + i power beta_i, then contraction, holder
    };
    const int groups = 1 + static_cast<int>(params.betas.size()) + 2;
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < suite.size(); ++c) {
        for (std::size_t i = 0; i < params.pq.size(); ++i) {
            for (int g = 0; g < groups; ++g) {
                const bool contraction = g == groups - 2;
                const bool holder = g == groups - 1;
                if ((contraction && !params.contraction) || (holder && !params.holder)) continue;
                tasks.push_back({c, i, g});
            }
        }
    }
    std::vector<std::vector<EstimateReport>> results(tasks.size());
    const auto n_tasks = static_cast<long long>(tasks.size());
#pragma omp parallel for schedule(dynamic)
    for (long long t = 0; t < n_tasks; ++t) {
        const auto& task = tasks[static_cast<std::size_t>(t)];
        const auto& ctx = suite[task.ctx];
        const auto [p, q] = params.pq[task.pq];
        auto& out = results[static_cast<std::size_t>(t)];
        if (task.group == 0) {
            out.push_back(check_sup_estimate(ctx, generic, p, q, params.options));
            out.push_back(check_lq_lp_estimate(ctx, generic, p, q, params.options));
            out.push_back(check_hessian_estimate(ctx, generic, p, q, params.options));
        } else if (task.group <= static_cast<int>(params.betas.size())) {
            const double beta = params.betas[static_cast<std::size_t>(task.group - 1)];
            out = check_power_variants(ctx, p, q, beta, params.options);
        } else if (task.group == groups - 2) {
            out.push_back(lp_contraction(ctx, p, q));
        } else {
            const auto& profile = ctx.profile();
            const double eps = params.holder_epsilon;
            const double qq = q;
            auto h1 = [&profile, &generic, eps](double t) {
                return generic(profile.alpha(t) + eps * t) * (profile.delta_of(t) + eps);
            };
            auto h2 = [&profile, &generic, eps, qq](double t) {
                return generic(profile.alpha(t) + eps * t) * std::pow(profile.delta_of(t) + eps, 1.0 - qq);
            };
            out.push_back(check_holder_bound(ctx, h1, h2, p, q, params.options));
        }
    }
    ScanSummary summary;
    for (auto& group : results) {
        for (auto& report : group) {
            const bool hessian = report.id == EstimateId::hessian_estimate ||
                                 report.id == EstimateId::hessian_power;
            if (hessian && report.empirical_ratio && std::isfinite(*report.empirical_ratio)) {
                summary.max_hessian_ratio = std::max(summary.max_hessian_ratio, *report.empirical_ratio);
            }
            if (!report.passed) ++summary.failed;
            if (report.vacuous) ++summary.vacuous;
            summary.reports.push_back(std::move(report));
        }
    }
    return summary;
}

RescalingTable scan_rescaling(const CoefficientProfile& base, const Forcing& g, const Grid& grid,
                              int base_cells, std::span<const double> lambdas, double p, double q,
                              const CheckOptions& options) {
    if (base_cells < 2 || base_cells % 2 != 0) {
        throw Error(ErrorKind::invalid_argument, "base cell count must be even");
    }
    RescalingTable table;
    for (double lambda : lambdas) {
        if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "lambda must be positive");
        const CoefficientProfile profile = base.rescaled(lambda);
        const Forcing forcing = g.rescaled(lambda);
        int cells = base_cells;
        if (lambda != 1.0) {
            cells = 2 * static_cast<int>(std::lround(base_cells / lambda / 2.0));
            cells = std::max(cells, 16);
        }
        const TimeGrid tg{profile.horizon(), cells};
        const auto mids = tg.midpoints();
        const EstimateContext ctx(profile, sample(forcing, grid, mids), {p}, true);
        const auto report = check_hessian_estimate(ctx, Weight::constant(), p, q, options);
        RescalingRow row;
        row.lambda = lambda;
        row.cells = cells;
        row.horizon = profile.horizon();
        row.lhs = report.lhs;
        row.rhs = report.rhs;
        row.ratio = report.empirical_ratio.value_or(kInfinity);
        table.rows.push_back(row);
    }
    if (!table.rows.empty()) {
        double lo = kInfinity;
        double hi = 0.0;
        for (const auto& row : table.rows) {
            lo = std::min(lo, row.ratio);
            hi = std::max(hi, row.ratio);
        }
        table.spread = lo > 0.0 ? (hi - lo) / lo : kInfinity;
    }
    return table;
}

std::vector<ProbeComparison> cross_validate(const CoefficientProfile& profile, const Forcing& f,
                                            const Grid& grid, int cells,
                                            std::span<const Probe> probes, std::size_t n_paths,
                                            std::uint64_t seed, double z_threshold) {
    const Forcing periodic = f.periodized(grid.halfwidth);
    const TimeGrid tg{profile.horizon(), cells};
    const auto mids = tg.midpoints();
    const SpaceTimeField u = solve_exact(sample(periodic, grid, mids), profile);

    std::vector<double> times(2 * static_cast<std::size_t>(cells) + 1);
    for (std::size_t k = 0; k < times.size(); ++k) times[k] = 0.5 * tg.step() * static_cast<double>(k);
    times.back() = profile.horizon();
    const PathEnsemble ensemble = simulate(profile, times, n_paths, seed);

    std::vector<ProbeComparison> out;
    for (const auto& probe : probes) {
        const std::size_t m = u.find_time(probe.t);
        if (m == SpaceTimeField::npos) {
            throw Error(ErrorKind::query_outside_grid, "probe time is not a solver node");
        }
        std::size_t flat = 0;
        for (int i = 0; i < grid.dimension; ++i) {
            const double index = (probe.x[i] + grid.halfwidth) / grid.spacing();
            const long j = std::lround(index);
            if (std::abs(index - static_cast<double>(j)) > 1e-9 || j < 0 || j >= grid.n) {
                throw Error(ErrorKind::query_outside_grid, "probe point is not a grid point");
            }
            flat = flat * static_cast<std::size_t>(grid.n) + static_cast<std::size_t>(j);
        }
        ProbeComparison row;
        row.probe = probe;
        row.spectral = u.slice(m)[flat];
        if (m > 0) {
            const Probe single[1] = {probe};
            row.mc = mc_solution(periodic, profile, single, ensemble, static_cast<int>(m))[0];
        }
        const double diff = std::abs(row.mc.estimate - row.spectral);
        if (row.mc.standard_error > 0.0) {
            row.z = diff / row.mc.standard_error;
        } else {
            row.z = diff == 0.0 ? 0.0 : kInfinity;
        }
        row.agree = row.z <= z_threshold;
        out.push_back(row);
    }
    return out;
}

std::vector<SplitLawRow> split_law(const CoefficientProfile& profile, std::optional<double> floor,
                                   std::span<const double> times, std::size_t n_paths,
                                   std::uint64_t seed) {
    const PathEnsemble direct = simulate(profile, times, n_paths, seed);
    const SplitEnsemble split = split_simulate(profile, floor, times, n_paths, seed);
    std::vector<SplitLawRow> out;
    const int d = profile.dimension();
    for (std::size_t k = 1; k < times.size(); ++k) {
        const auto a = sample_covariance(direct, k);
        const auto b = sample_covariance(split.combined, k);
        for (int i = 0; i < d; ++i) {
            for (int j = i; j < d; ++j) {
                SplitLawRow row;
                row.t = times[k];
                row.i = i;
                row.j = j;
                row.direct = a.covariance(i, j);
                row.split = b.covariance(i, j);
                const double se = std::hypot(a.standard_error(i, j), b.standard_error(i, j));
                const double diff = std::abs(row.direct - row.split);
                row.z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : kInfinity);
                out.push_back(row);
            }
        }
    }
    return out;
}

double transform_mismatch(const CoefficientProfile& profile, const SpaceTimeField& f) {
    const SpaceTimeField direct = solve_exact(f, profile);
    const SpaceTimeField reduced = solve_exact(transform_reduce(f, profile), profile.without_lower_order());
    const SpaceTimeField restored = transform_restore(reduced, profile);
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < direct.values().size(); ++i) {
        diff = std::max(diff, std::abs(direct.values()[i] - restored.values()[i]));
        scale = std::max(scale, std::abs(direct.values()[i]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

}  // namespace degpar
