#pragma once

// Monte Carlo realizations of X_t = sqrt(2) int_0^t sqrt(A)(s) dB_s. The
// coefficients depend on t only, so each increment over [t_k, t_{k+1}] is
// exactly N(0, Sigma(t_k, t_{k+1})) and is drawn as sqrt(Sigma) Z.

#include "degpar/field.hpp"
#include "degpar/forcing.hpp"
#include "degpar/profiles.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace degpar {

struct PathEnsemble {
    int dimension = 1;
    std::vector<double> times;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::string profile_id;
    std::vector<double> samples;  // [path][time][component]

    std::size_t n_times() const noexcept { return times.size(); }
    std::span<const double> position(std::size_t path, std::size_t k) const noexcept {
        const auto d = static_cast<std::size_t>(dimension);
        return {samples.data() + (path * n_times() + k) * d, d};
    }
    /// Index of `t` in times (relative tolerance 1e-12), or npos.
    std::size_t find_time(double t) const noexcept;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct SplitEnsemble {
    double delta_floor = 0.0;
    PathEnsemble isotropic;  // X^1, covariance 2 floor (t - s) I
    PathEnsemble remainder;  // X^2, covariance 2 int (A - floor I)
    PathEnsemble combined;   // X^1 + X^2
};

/// Random stream tags: direct simulation and the two halves of a split use
/// disjoint Philox counters.
enum class Stream : std::uint32_t { direct = 0, isotropic = 1, remainder = 2 };

PathEnsemble simulate(const CoefficientProfile& profile, std::span<const double> times,
                      std::size_t n_paths, std::uint64_t seed);

/// delta_floor defaults to the profile's minimum of delta on its dense sample.
SplitEnsemble split_simulate(const CoefficientProfile& profile, std::optional<double> delta_floor,
                             std::span<const double> times, std::size_t n_paths,
                             std::uint64_t seed);

struct Probe {
    double t = 0.0;
    SpacePoint x{};
};

struct McEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
};

/// u(t, x) ~ sum_j w_j e^{int_{s_j}^t c} mean_paths f(s_j, x + int_{s_j}^t b + X_t - X_{s_j})
/// with midpoint nodes s_j = (j + 1/2) t / n_time_quadrature, all of which
/// (and t) must be ensemble times. The standard error is that of the per-path
/// quadrature sum.
std::vector<McEstimate> mc_solution(const Forcing& f, const CoefficientProfile& profile,
                                    std::span<const Probe> probes, const PathEnsemble& ensemble,
                                    int n_time_quadrature);
/// Same with f sampled on a grid: multilinear in x, linear in t between slices.
std::vector<McEstimate> mc_solution(const SpaceTimeField& f, const CoefficientProfile& profile,
                                    std::span<const Probe> probes, const PathEnsemble& ensemble,
                                    int n_time_quadrature);

/// Sample covariance of X_{t_k} and its componentwise standard error, the
/// latter from the sample variance of the centred products.
struct CovarianceEstimate {
    Matrix covariance;
    Matrix standard_error;
};
CovarianceEstimate sample_covariance(const PathEnsemble& ensemble, std::size_t k);
Vector sample_mean(const PathEnsemble& ensemble, std::size_t k);

/// Flat binary: u64 d, u64 M+1, u64 n_paths, u64 seed, then M+1 f64 times,
/// then the samples as f64 [path][time][component]; little-endian.
void write_ensemble(const PathEnsemble& ensemble, const std::string& path);
PathEnsemble read_ensemble(const std::string& path);

namespace reference {
PathEnsemble simulate(const CoefficientProfile& profile, std::span<const double> times,
                      std::size_t n_paths, std::uint64_t seed);
std::vector<McEstimate> mc_solution(const Forcing& f, const CoefficientProfile& profile,
                                    std::span<const Probe> probes, const PathEnsemble& ensemble,
                                    int n_time_quadrature);
}  // namespace reference

}  // namespace degpar
