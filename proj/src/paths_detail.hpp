#pragma once

// Building blocks shared by the parallel and the serial path code, so both
// consume exactly the same Philox cells and factorizations.

#include "degpar/paths.hpp"
#include "degpar/rng.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace degpar::detail {

/// sqrt(Sigma(t_k, t_{k+1}) - 2 floor (t_{k+1} - t_k) I) per interval, row-major d x d.
struct IncrementFactors {
    int dimension = 1;
    std::vector<double> factors;
};

struct NodePlan {
    double time = 0.0;
    std::size_t index = 0;
    double weight = 0.0;       // midpoint width times e^{int_s^t c}
    std::array<double, 3> shift{};  // x + int_s^t b
};

void check_times(std::span<const double> times);
IncrementFactors increment_factors(const CoefficientProfile& profile, std::span<const double> times,
                                   double floor);
/// Writes n_times * d positions of one path starting at the origin.
void fill_path(const IncrementFactors& inc, const NormalStream& rng, Stream stream,
               std::size_t path, std::size_t n_times, double* out);
PathEnsemble empty_ensemble(const CoefficientProfile& profile, std::span<const double> times,
                            std::size_t n_paths, std::uint64_t seed);
std::vector<NodePlan> quadrature_plan(const CoefficientProfile& profile,
                                      const PathEnsemble& ensemble, const Probe& probe,
                                      int n_time_quadrature, std::size_t& target_index);
/// Mean and standard error of per-path values, summed in path order.
McEstimate summarize(std::span<const double> per_path);

}  // namespace degpar::detail
