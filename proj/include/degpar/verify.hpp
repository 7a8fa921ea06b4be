#pragma once

// Both sides of the weighted estimates for u_t = a^{ij} u_{ij} + b.grad u + c u + f,
// evaluated on the discrete solution. Notation: C(t) = int_0^t c, alpha the time
// change of the profile, and
//
//     rhs_eps = int_0^T |f(t)|_p^q e^{-q C(t)} w(alpha(t) + eps t) (delta(t) + eps)^{1-q} dt,
//
// whose eps -> 0 limit (possibly +inf) is the right-hand side of every estimate.
//
// Time discretization: f lives on the midpoints s_k of a uniform grid with M
// cells, u on its nodes t_m. Integrals of f use the midpoint rule on s_k;
// integrals of u use the midpoint rule on the cells [t_{2j}, t_{2j+2}], whose
// centres t_{2j+1} are solution nodes (M must be even).

#include "degpar/field.hpp"
#include "degpar/forcing.hpp"
#include "degpar/paths.hpp"
#include "degpar/profiles.hpp"
#include "degpar/weights.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace degpar {

enum class EstimateId {
    sup_estimate,
    lq_lp_estimate,
    hessian_estimate,
    sup_power,
    lq_lp_power,
    hessian_power,
    lp_contraction,
    holder_bound,
};

std::string_view to_string(EstimateId id) noexcept;

inline constexpr double kEstimateTolerance = 0.05;
inline constexpr double kContractionSlack = 1e-9;

enum class RhsStatus { convergent, divergent, indeterminate };
std::string_view to_string(RhsStatus status) noexcept;

struct EpsilonSample {
    double epsilon = 0.0;
    double value = 0.0;
};

struct RhsCriteria {
    double convergence_relative = 1e-3;  // two successive relative changes below this
    double divergence_growth = 1e12;     // last / first beyond this, monotone
    int divergence_window = 5;           // non-decreasing trailing increments
};

struct RhsResult {
    RhsStatus status = RhsStatus::indeterminate;
    double value = 0.0;  // extrapolated limit, +inf, or the last trace value
    std::vector<EpsilonSample> trace;
};

/// eps_k = 2^{-k}, k = 0..20.
std::vector<double> default_eps_schedule();

struct EstimateParameters {
    double p = 2.0;
    double q = 2.0;
    std::optional<double> beta_w;
    std::string weight;
    double horizon = 0.0;
    std::string profile;
};

struct EstimateReport {
    EstimateId id = EstimateId::sup_estimate;
    double lhs = 0.0;
    double rhs = 0.0;  // +inf when divergent
    RhsStatus rhs_status = RhsStatus::convergent;
    std::optional<double> explicit_constant;
    std::optional<double> empirical_ratio;
    std::vector<EpsilonSample> epsilon_trace;
    EstimateParameters parameters;
    bool passed = false;
    bool vacuous = false;
    std::string note;
};

/// max_m |u(t_m)|_p^q e^{-q C(t_m)} from per-node norms.
double lhs_sup(std::span<const double> node_norms, std::span<const double> node_times,
               const CoefficientProfile& profile, double q);
double lhs_sup(const SpaceTimeField& u, const CoefficientProfile& profile, double p, double q);

/// Midpoint rule over [t_{2j}, t_{2j+2}] of n(t)^q e^{-q C} w(alpha) delta at
/// the odd nodes; `node_norms` holds n(t_0..t_M).
double lhs_weighted(std::span<const double> node_norms, const TimeGrid& grid, const Weight& w,
                    const CoefficientProfile& profile, double q);

/// rhs_eps on the schedule (strictly decreasing, positive) from midpoint
/// norms of f, with the convergence / divergence classification.
RhsResult rhs_weighted(std::span<const double> midpoint_norms, const TimeGrid& grid,
                       const Weight& w, const CoefficientProfile& profile, double q,
                       std::span<const double> eps_schedule, const RhsCriteria& criteria = {});
RhsResult classify(std::vector<EpsilonSample> trace, const RhsCriteria& criteria = {});

/// [int_0^{alpha(T)} w^{-1/(q-1)}]^{q-1}.
double sup_constant(const Weight& w, const CoefficientProfile& profile, double q);
/// [(q-1)/(q-1-beta)]^{q-1} alpha(T)^{q-1-beta}.
double sup_power_constant(double q, double beta, double alpha_T);
/// A_q estimate of w over [-alpha(T), alpha(T)], which has [0, alpha(T)] as a
/// dyadic child.
AqEstimate lq_lp_aq(const Weight& w, const CoefficientProfile& profile, double q, int levels);

/// A solved problem with cached per-time norms for a fixed set of exponents.
class EstimateContext {
public:
    /// Solves u = solve_exact(f, profile); hessian norms are computed when
    /// `with_hessian` is set.
    EstimateContext(CoefficientProfile profile, SpaceTimeField f, std::vector<double> ps,
                    bool with_hessian = true);
    EstimateContext(CoefficientProfile profile, SpaceTimeField f, SpaceTimeField u,
                    std::vector<double> ps, bool with_hessian = true);

    const CoefficientProfile& profile() const noexcept { return profile_; }
    const SpaceTimeField& f() const noexcept { return f_; }
    const SpaceTimeField& u() const noexcept { return u_; }
    const TimeGrid& time_grid() const noexcept { return time_grid_; }

    const std::vector<double>& f_norms(double p) const;
    const std::vector<double>& u_norms(double p) const;
    const std::vector<double>& hessian_norms(double p) const;
    bool has_hessian() const noexcept { return !hessian_norms_.empty(); }

private:
    void precompute(const std::vector<double>& ps, bool with_hessian);

    CoefficientProfile profile_;
    SpaceTimeField f_;
    SpaceTimeField u_;
    TimeGrid time_grid_;
    std::map<double, std::vector<double>> f_norms_;
    std::map<double, std::vector<double>> u_norms_;
    std::map<double, std::vector<double>> hessian_norms_;
};

struct CheckOptions {
    std::vector<double> eps_schedule = default_eps_schedule();
    RhsCriteria criteria{};
    double tolerance = kEstimateTolerance;
    int aq_levels = 12;
};

EstimateReport check_sup_estimate(const EstimateContext& ctx, const Weight& w, double p, double q,
                                  const CheckOptions& options = {});
EstimateReport check_lq_lp_estimate(const EstimateContext& ctx, const Weight& w, double p,
                                    double q, const CheckOptions& options = {});
EstimateReport check_hessian_estimate(const EstimateContext& ctx, const Weight& w, double p,
                                      double q, const CheckOptions& options = {});
/// sup_power, lq_lp_power and (when the context has hessian norms)
/// hessian_power for w = |t|^beta; throws Error{admissibility} unless
/// -1 < beta < q - 1.
std::vector<EstimateReport> check_power_variants(const EstimateContext& ctx, double p, double q,
                                                 double beta, const CheckOptions& options = {});

using TimeFunction = std::function<double(double)>;

/// int |u|_p^q e^{-qC} h1 <= (1 + tol) int h1(t) [int_0^t h2^{-1/(q-1)}]^{q-1}
///                                       int_0^t |f|_p^q e^{-qC} h2 ds dt.
EstimateReport check_holder_bound(const EstimateContext& ctx, const TimeFunction& h1,
                                  const TimeFunction& h2, double p, double q,
                                  const CheckOptions& options = {});

/// |u(t_m)|_p <= sum_{s_k < t_m} (T/M) e^{C(t_m) - C(s_k)} |f(s_k)|_p + 1e-9
/// at every node; the report carries the node with the smallest margin. `q`
/// only labels the report.
EstimateReport lp_contraction(const EstimateContext& ctx, double p, double q = 1.0);

struct ScanParameters {
    std::vector<std::pair<double, double>> pq{{2.0, 2.0}};
    std::vector<double> betas{0.0};
    std::optional<Weight> weight;  // generic weight; defaults to w = 1
    bool contraction = true;
    /// Hoelder bound with the proof's pair h1 = w(alpha_eps)(delta + eps),
    /// h2 = w(alpha_eps)(delta + eps)^{1-q} at this eps.
    bool holder = true;
    double holder_epsilon = 1e-3;
    CheckOptions options{};

    static std::vector<std::pair<double, double>> product(std::span<const double> ps,
                                                          std::span<const double> qs);
};

struct ScanSummary {
    std::vector<EstimateReport> reports;
    double max_hessian_ratio = 0.0;
    std::size_t failed = 0;
    std::size_t vacuous = 0;
};

/// Every check for every (p, q) and beta on each context; checks for one
/// context run in parallel.
ScanSummary scan_profiles(std::span<const EstimateContext> suite, const ScanParameters& params);

struct RescalingRow {
    double lambda = 1.0;
    int cells = 0;
    double horizon = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

struct RescalingTable {
    std::vector<RescalingRow> rows;
    double spread = 0.0;  // (max - min) / min of the ratios
};

/// Hessian-estimate ratios (w = 1) of a_lambda = lambda a(lambda t),
/// f_lambda = lambda g(lambda t), horizon T / lambda. The time step T / M of
/// the base problem is kept, so member lambda uses round(M / lambda) cells
/// (rounded to even, at least 16).
RescalingTable scan_rescaling(const CoefficientProfile& base, const Forcing& g, const Grid& grid,
                              int base_cells, std::span<const double> lambdas, double p, double q,
                              const CheckOptions& options = {});

// Experiments comparing independent routes to the same object.

struct ProbeComparison {
    Probe probe;
    double spectral = 0.0;
    McEstimate mc;
    double z = 0.0;  // |mc - spectral| / se (0 when both agree exactly)
    bool agree = false;
};

/// solve_exact against mc_solution at node probes (t_m, grid point). Both use
/// the forcing periodized on the grid box, so they target the same torus
/// problem; the ensemble lives on all multiples of half a time step, so the
/// MC time quadrature at t_m uses exactly the solver's midpoints.
std::vector<ProbeComparison> cross_validate(const CoefficientProfile& profile, const Forcing& f,
                                            const Grid& grid, int cells,
                                            std::span<const Probe> probes, std::size_t n_paths,
                                            std::uint64_t seed, double z_threshold = 3.0);

struct SplitLawRow {
    double t = 0.0;
    int i = 0;
    int j = 0;
    double direct = 0.0;
    double split = 0.0;
    double z = 0.0;
};

/// Componentwise covariance z-scores between a direct and a split ensemble
/// (same seed, disjoint streams) at every grid time t > 0.
std::vector<SplitLawRow> split_law(const CoefficientProfile& profile, std::optional<double> floor,
                                   std::span<const double> times, std::size_t n_paths,
                                   std::uint64_t seed);

/// max |u - restore(solve(reduce(f)))| / max |u| with u the direct solve of
/// the full profile and the inner solve using the profile without b, c.
double transform_mismatch(const CoefficientProfile& profile, const SpaceTimeField& f);

}  // namespace degpar
