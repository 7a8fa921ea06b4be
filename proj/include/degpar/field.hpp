#pragma once

#include "degpar/forcing.hpp"
#include "degpar/profiles.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace degpar {

/// Periodic box [-L, L)^d with n points per axis (n a power of two).
struct Grid {
    int dimension = 1;
    int n = 64;
    double halfwidth = 1.0;

    Grid() = default;
    Grid(int dimension, int n, double halfwidth);

    double spacing() const noexcept { return 2.0 * halfwidth / n; }
    double cell_volume() const noexcept;
    std::size_t size() const noexcept;
    double coordinate(int j) const noexcept { return -halfwidth + j * spacing(); }
    /// Coordinates of the flat (row-major) index.
    SpacePoint point(std::size_t flat) const noexcept;
    bool operator==(const Grid&) const = default;
};

/// Uniform time grid t_m = m T / M with midpoint nodes s_k = (k + 1/2) T / M.
struct TimeGrid {
    double horizon = 1.0;
    int cells = 64;

    double step() const noexcept { return horizon / cells; }
    std::vector<double> nodes() const;      // t_0 .. t_M
    std::vector<double> midpoints() const;  // s_0 .. s_{M-1}
};

/// Samples on grid x times; values are time-major, each slice row-major.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(Grid grid, std::vector<double> times);
    SpaceTimeField(Grid grid, std::vector<double> times, std::vector<double> values);

    const Grid& grid() const noexcept { return grid_; }
    const std::vector<double>& times() const noexcept { return times_; }
    std::size_t n_times() const noexcept { return times_.size(); }
    std::size_t slice_size() const noexcept { return grid_.size(); }

    std::span<double> slice(std::size_t k);
    std::span<const double> slice(std::size_t k) const;
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }

    /// Index of `t` in times() (relative tolerance 1e-12), or npos.
    std::size_t find_time(double t) const noexcept;
    /// Periodic multilinear interpolation at x for time slice k.
    double interpolate(std::size_t k, std::span<const double> x) const;
    bool all_finite() const noexcept;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    Grid grid_;
    std::vector<double> times_;
    std::vector<double> values_;
};

/// Gaussian transition with growth: g -> e^{growth} E[g(. + shift + Z)],
/// Z ~ N(0, sigma); sigma may be singular.
struct KernelSpec {
    Matrix sigma;
    Vector shift;
    double growth = 0.0;

    static KernelSpec between(const CoefficientProfile& profile, double s, double t);
    static KernelSpec identity(int dimension);
};

SpaceTimeField sample(const Forcing& forcing, const Grid& grid, std::span<const double> times);

std::vector<double> apply_kernel(const Grid& grid, std::span<const double> g, const KernelSpec& k);

/// Solution on the node grid t_0..t_M of the uniform midpoint grid carried by
/// f (f.times() must be s_0..s_{M-1}):
///   u(t_m) = sum_{k<m} (T/M) apply_kernel(f(s_k), KernelSpec::between(s_k, t_m)).
/// Parallel over target times.
SpaceTimeField solve_exact(const SpaceTimeField& f, const CoefficientProfile& profile);

/// Recovers the time grid from a field sampled at midpoints; throws otherwise.
TimeGrid midpoint_time_grid(const SpaceTimeField& f);

/// All second derivatives, row-major d x d (the matrix is symmetric).
std::vector<SpaceTimeField> hessian(const SpaceTimeField& u);
/// Pointwise Frobenius norm of the Hessian.
SpaceTimeField hessian_frobenius(const SpaceTimeField& u);

/// (sum |v|^p h^d)^{1/p}; p = +inf gives max |v|.
double lp_norm(const Grid& grid, std::span<const double> slice, double p);
/// lp_norm of every time slice.
std::vector<double> lp_norms(const SpaceTimeField& field, double p);

/// v(t, x) = e^{-int_0^t c} u(t, x - int_0^t b), slice by slice.
SpaceTimeField transform_reduce(const SpaceTimeField& u, const CoefficientProfile& profile);
/// Inverse of transform_reduce.
SpaceTimeField transform_restore(const SpaceTimeField& v, const CoefficientProfile& profile);

/// Smallest L with L >= |shift| + 8 sqrt(lambda_max(Sigma(0,T))) + radius.
double recommended_halfwidth(const CoefficientProfile& profile, double forcing_radius);

void write_field(const SpaceTimeField& field, const std::string& binary_path,
                 const std::string& sidecar_path);
SpaceTimeField read_field(const std::string& binary_path, const std::string& sidecar_path);

namespace reference {
/// Serial solver: one apply_kernel call per (k, m) pair, summed in x space.
SpaceTimeField solve_exact(const SpaceTimeField& f, const CoefficientProfile& profile);
}  // namespace reference

}  // namespace degpar
