#include "degpar/paths.hpp"

#include "degpar/error.hpp"
#include "degpar/rng.hpp"
#include "paths_detail.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace degpar {

std::size_t PathEnsemble::find_time(double t) const noexcept {
    const double scale = times.empty() ? 1.0 : std::max(1.0, std::abs(times.back()));
    auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12 * scale);
    if (it != times.end() && std::abs(*it - t) <= 1e-12 * scale) {
        return static_cast<std::size_t>(it - times.begin());
    }
    return npos;
}

namespace detail {

void check_times(std::span<const double> times) {
    if (times.empty() || times.front() != 0.0) {
        throw Error(ErrorKind::invalid_argument, "time grid must start at 0");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) {
            throw Error(ErrorKind::invalid_argument, "time grid must be strictly increasing");
        }
    }
}

IncrementFactors increment_factors(const CoefficientProfile& profile, std::span<const double> times,
                                   double floor) {
    const int d = profile.dimension();
    IncrementFactors out;
    out.dimension = d;
    out.factors.resize((times.size() - 1) * static_cast<std::size_t>(d * d));
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        Matrix sigma = profile.integral_matrix(times[k], times[k + 1]);
        if (floor != 0.0) {
            sigma -= 2.0 * floor * (times[k + 1] - times[k]) * Matrix::Identity(d, d);
        }
        Matrix root;
        try {
            root = matrix_sqrt_psd(sigma);
        } catch (const Error& e) {
            if (floor != 0.0 && e.kind() == ErrorKind::not_psd) {
                std::ostringstream msg;
                msg << "A - " << floor << " I is not PSD on [" << times[k] << ", " << times[k + 1]
                    << "]";
                throw Error(ErrorKind::floor_too_large, msg.str());
            }
            throw;
        }
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                out.factors[k * static_cast<std::size_t>(d * d) + static_cast<std::size_t>(i * d + j)] =
                    root(i, j);
            }
        }
    }
    return out;
}

void fill_path(const IncrementFactors& inc, const NormalStream& rng, Stream stream,
               std::size_t path, std::size_t n_times, double* out) {
    const int d = inc.dimension;
    std::array<double, 3> z{};
    for (int i = 0; i < d; ++i) out[i] = 0.0;
    for (std::size_t k = 0; k + 1 < n_times; ++k) {
        rng.normals(static_cast<std::uint32_t>(stream), path, static_cast<std::uint32_t>(k),
                    z.data(), d);
        const double* root = inc.factors.data() + k * static_cast<std::size_t>(d * d);
        const double* prev = out + k * static_cast<std::size_t>(d);
        double* next = out + (k + 1) * static_cast<std::size_t>(d);
        for (int i = 0; i < d; ++i) {
            double step = 0.0;
            for (int j = 0; j < d; ++j) step += root[i * d + j] * z[j];
            next[i] = prev[i] + step;
        }
    }
}

PathEnsemble empty_ensemble(const CoefficientProfile& profile, std::span<const double> times,
                            std::size_t n_paths, std::uint64_t seed) {
    check_times(times);
    if (n_paths == 0) throw Error(ErrorKind::invalid_argument, "n_paths must be >= 1");
    PathEnsemble e;
    e.dimension = profile.dimension();
    e.times.assign(times.begin(), times.end());
    e.n_paths = n_paths;
    e.seed = seed;
    e.profile_id = profile.id();
    e.samples.assign(n_paths * times.size() * static_cast<std::size_t>(e.dimension), 0.0);
    return e;
}

std::vector<NodePlan> quadrature_plan(const CoefficientProfile& profile,
                                      const PathEnsemble& ensemble, const Probe& probe,
                                      int n_time_quadrature, std::size_t& target_index) {
    target_index = ensemble.find_time(probe.t);
    if (target_index == PathEnsemble::npos) {
        std::ostringstream msg;
        msg << "query time " << probe.t << " is not an ensemble time";
        throw Error(ErrorKind::query_outside_grid, msg.str());
    }
    std::vector<NodePlan> plan;
    if (probe.t == 0.0) return plan;
    const double width = probe.t / n_time_quadrature;
    for (int j = 0; j < n_time_quadrature; ++j) {
        NodePlan node;
        node.time = (j + 0.5) * width;
        node.index = ensemble.find_time(node.time);
        if (node.index == PathEnsemble::npos) {
            std::ostringstream msg;
            msg << "quadrature node " << node.time << " is not an ensemble time";
            throw Error(ErrorKind::invalid_argument, msg.str());
        }
        node.weight = width * std::exp(profile.integral_scalar(node.time, probe.t));
        const Vector shift = profile.integral_vector(node.time, probe.t);
        for (int i = 0; i < profile.dimension(); ++i) node.shift[i] = probe.x[i] + shift(i);
        plan.push_back(node);
    }
    return plan;
}

McEstimate summarize(std::span<const double> per_path) {
    const auto n = static_cast<double>(per_path.size());
    double total = 0.0;
    for (double y : per_path) total += y;
    const double mean = total / n;
    if (per_path.size() < 2) return {mean, 0.0};
    double sq = 0.0;
    for (double y : per_path) sq += (y - mean) * (y - mean);
    return {mean, std::sqrt(sq / (n - 1.0) / n)};
}

namespace {

template <typename Evaluate>
std::vector<McEstimate> mc_parallel(const Evaluate& eval, const CoefficientProfile& profile,
                                    std::span<const Probe> probes, const PathEnsemble& ensemble,
                                    int n_time_quadrature) {
    if (n_time_quadrature < 1) throw Error(ErrorKind::invalid_argument, "need >= 1 time node");
    if (ensemble.dimension != profile.dimension()) {
        throw Error(ErrorKind::invalid_argument, "ensemble and profile dimensions differ");
    }
    const int d = profile.dimension();
    std::vector<McEstimate> out;
    std::vector<double> per_path(ensemble.n_paths);
    for (const auto& probe : probes) {
        std::size_t target = 0;
        const auto plan = quadrature_plan(profile, ensemble, probe, n_time_quadrature, target);
        const auto n_paths = static_cast<long long>(ensemble.n_paths);
#pragma omp parallel for schedule(static)
        for (long long p = 0; p < n_paths; ++p) {
            const auto path = static_cast<std::size_t>(p);
            const auto end = ensemble.position(path, target);
            double y = 0.0;
            std::array<double, 3> x{};
            for (const auto& node : plan) {
                const auto start = ensemble.position(path, node.index);
                for (int i = 0; i < d; ++i) x[i] = node.shift[i] + end[i] - start[i];
                y += node.weight * eval(node.time, std::span<const double>(x.data(), d));
            }
            per_path[path] = y;
        }
        out.push_back(summarize(per_path));
    }
    return out;
}

}  // namespace

}  // namespace detail

PathEnsemble simulate(const CoefficientProfile& profile, std::span<const double> times,
                      std::size_t n_paths, std::uint64_t seed) {
    PathEnsemble e = detail::empty_ensemble(profile, times, n_paths, seed);
    const auto inc = detail::increment_factors(profile, times, 0.0);
    const NormalStream rng(seed);
    const std::size_t stride = e.n_times() * static_cast<std::size_t>(e.dimension);
    const auto n = static_cast<long long>(n_paths);
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < n; ++p) {
        const auto path = static_cast<std::size_t>(p);
        detail::fill_path(inc, rng, Stream::direct, path, e.n_times(), e.samples.data() + path * stride);
    }
    return e;
}

SplitEnsemble split_simulate(const CoefficientProfile& profile, std::optional<double> delta_floor,
                             std::span<const double> times, std::size_t n_paths,
                             std::uint64_t seed) {
    const double floor = delta_floor.value_or(profile.min_delta());
    if (!(floor >= 0.0)) throw Error(ErrorKind::invalid_argument, "delta_floor must be >= 0");
    if (floor > profile.min_delta() + kEigenClamp) {
        std::ostringstream msg;
        msg << "delta_floor " << floor << " exceeds min delta " << profile.min_delta();
        throw Error(ErrorKind::floor_too_large, msg.str());
    }
    SplitEnsemble out;
    out.delta_floor = floor;
    out.isotropic = detail::empty_ensemble(profile, times, n_paths, seed);
    out.remainder = detail::empty_ensemble(profile, times, n_paths, seed);
    out.combined = detail::empty_ensemble(profile, times, n_paths, seed);

    const int d = profile.dimension();
    detail::IncrementFactors iso;
    iso.dimension = d;
    iso.factors.assign((times.size() - 1) * static_cast<std::size_t>(d * d), 0.0);
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double scale = std::sqrt(2.0 * floor * (times[k + 1] - times[k]));
        for (int i = 0; i < d; ++i) {
            iso.factors[k * static_cast<std::size_t>(d * d) + static_cast<std::size_t>(i * d + i)] = scale;
        }
    }
    const auto rest = detail::increment_factors(profile, times, floor);
    const NormalStream rng(seed);
    const std::size_t stride = times.size() * static_cast<std::size_t>(d);
    const auto n = static_cast<long long>(n_paths);
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < n; ++p) {
        const auto path = static_cast<std::size_t>(p);
        double* a = out.isotropic.samples.data() + path * stride;
        double* b = out.remainder.samples.data() + path * stride;
        double* c = out.combined.samples.data() + path * stride;
        detail::fill_path(iso, rng, Stream::isotropic, path, times.size(), a);
        detail::fill_path(rest, rng, Stream::remainder, path, times.size(), b);
        for (std::size_t i = 0; i < stride; ++i) c[i] = a[i] + b[i];
    }
    return out;
}

std::vector<McEstimate> mc_solution(const Forcing& f, const CoefficientProfile& profile,
                                    std::span<const Probe> probes, const PathEnsemble& ensemble,
                                    int n_time_quadrature) {
    if (f.is_zero()) {
        for (const auto& probe : probes) {
            std::size_t target = 0;
            detail::quadrature_plan(profile, ensemble, probe, n_time_quadrature, target);
        }
        return std::vector<McEstimate>(probes.size());
    }
    return detail::mc_parallel([&f](double t, std::span<const double> x) { return f(t, x); },
                               profile, probes, ensemble, n_time_quadrature);
}

std::vector<McEstimate> mc_solution(const SpaceTimeField& f, const CoefficientProfile& profile,
                                    std::span<const Probe> probes, const PathEnsemble& ensemble,
                                    int n_time_quadrature) {
    const Grid& g = f.grid();
    for (const auto& probe : probes) {
        for (int i = 0; i < g.dimension; ++i) {
            if (probe.x[i] < -g.halfwidth || probe.x[i] >= g.halfwidth) {
                throw Error(ErrorKind::query_outside_grid, "probe point outside the periodic box");
            }
        }
    }
    const auto& ft = f.times();
    auto eval = [&f, &ft](double t, std::span<const double> x) {
        const std::size_t exact = f.find_time(t);
        if (exact != SpaceTimeField::npos) return f.interpolate(exact, x);
        auto it = std::upper_bound(ft.begin(), ft.end(), t);
        if (it == ft.begin() || it == ft.end()) {
            throw Error(ErrorKind::query_outside_grid, "forcing time outside the sampled range");
        }
        const auto hi = static_cast<std::size_t>(it - ft.begin());
        const double theta = (t - ft[hi - 1]) / (ft[hi] - ft[hi - 1]);
        return (1.0 - theta) * f.interpolate(hi - 1, x) + theta * f.interpolate(hi, x);
    };
    return detail::mc_parallel(eval, profile, probes, ensemble, n_time_quadrature);
}

CovarianceEstimate sample_covariance(const PathEnsemble& ensemble, std::size_t k) {
    const int d = ensemble.dimension;
    const Vector mean = sample_mean(ensemble, k);
    const auto n = static_cast<double>(ensemble.n_paths);
    Matrix sum = Matrix::Zero(d, d);
    Matrix sum_sq = Matrix::Zero(d, d);
    for (std::size_t p = 0; p < ensemble.n_paths; ++p) {
        const auto x = ensemble.position(p, k);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                const double prod = (x[i] - mean(i)) * (x[j] - mean(j));
                sum(i, j) += prod;
                sum_sq(i, j) += prod * prod;
            }
        }
    }
    CovarianceEstimate out;
    out.covariance = sum / (n - 1.0);
    out.standard_error = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            const double m = sum(i, j) / n;
            const double var = std::max(sum_sq(i, j) / n - m * m, 0.0);
            out.standard_error(i, j) = std::sqrt(var / n);
        }
    }
    return out;
}

Vector sample_mean(const PathEnsemble& ensemble, std::size_t k) {
    Vector mean = Vector::Zero(ensemble.dimension);
    for (std::size_t p = 0; p < ensemble.n_paths; ++p) {
        const auto x = ensemble.position(p, k);
        for (int i = 0; i < ensemble.dimension; ++i) mean(i) += x[i];
    }
    return mean / static_cast<double>(ensemble.n_paths);
}

void write_ensemble(const PathEnsemble& ensemble, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot open " + path);
    const std::uint64_t header[4] = {static_cast<std::uint64_t>(ensemble.dimension),
                                     static_cast<std::uint64_t>(ensemble.n_times()),
                                     static_cast<std::uint64_t>(ensemble.n_paths), ensemble.seed};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(ensemble.times.data()),
              static_cast<std::streamsize>(ensemble.times.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(ensemble.samples.data()),
              static_cast<std::streamsize>(ensemble.samples.size() * sizeof(double)));
    if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

PathEnsemble read_ensemble(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    std::uint64_t header[4] = {};
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw Error(ErrorKind::io, "truncated ensemble header");
    PathEnsemble e;
    e.dimension = static_cast<int>(header[0]);
    e.times.resize(header[1]);
    e.n_paths = header[2];
    e.seed = header[3];
    e.samples.resize(header[1] * header[2] * header[0]);
    in.read(reinterpret_cast<char*>(e.times.data()),
            static_cast<std::streamsize>(e.times.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(e.samples.data()),
            static_cast<std::streamsize>(e.samples.size() * sizeof(double)));
    if (!in) throw Error(ErrorKind::io, "truncated ensemble payload");
    return e;
}

}  // namespace degpar
