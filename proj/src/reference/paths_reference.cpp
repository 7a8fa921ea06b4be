// Serial path kernels. The loops run step-major rather than path-major, which
// exercises the claim that draws depend only on (seed, stream, path, step).

#include "degpar/error.hpp"
#include "degpar/paths.hpp"
#include "../paths_detail.hpp"

namespace degpar::reference {

PathEnsemble simulate(const CoefficientProfile& profile, std::span<const double> times,
                      std::size_t n_paths, std::uint64_t seed) {
    PathEnsemble e = detail::empty_ensemble(profile, times, n_paths, seed);
    const auto inc = detail::increment_factors(profile, times, 0.0);
    const NormalStream rng(seed);
    const int d = e.dimension;
    const std::size_t stride = e.n_times() * static_cast<std::size_t>(d);
    std::array<double, 3> z{};
    for (std::size_t k = 0; k + 1 < e.n_times(); ++k) {
        const double* root = inc.factors.data() + k * static_cast<std::size_t>(d * d);
        for (std::size_t p = 0; p < n_paths; ++p) {
            rng.normals(static_cast<std::uint32_t>(Stream::direct), p, static_cast<std::uint32_t>(k),
                        z.data(), d);
            double* prev = e.samples.data() + p * stride + k * static_cast<std::size_t>(d);
            double* next = prev + d;
            for (int i = 0; i < d; ++i) {
                double step = 0.0;
                for (int j = 0; j < d; ++j) step += root[i * d + j] * z[j];
                next[i] = prev[i] + step;
            }
        }
    }
    return e;
}

std::vector<McEstimate> mc_solution(const Forcing& f, const CoefficientProfile& profile,
                                    std::span<const Probe> probes, const PathEnsemble& ensemble,
                                    int n_time_quadrature) {
    if (n_time_quadrature < 1) throw Error(ErrorKind::invalid_argument, "need >= 1 time node");
    const int d = profile.dimension();
    std::vector<McEstimate> out;
    std::vector<double> per_path(ensemble.n_paths, 0.0);
    for (const auto& probe : probes) {
        std::size_t target = 0;
        const auto plan = detail::quadrature_plan(profile, ensemble, probe, n_time_quadrature, target);
        std::fill(per_path.begin(), per_path.end(), 0.0);
        std::array<double, 3> x{};
        for (std::size_t p = 0; p < ensemble.n_paths; ++p) {
            const auto end = ensemble.position(p, target);
            for (const auto& node : plan) {
                const auto start = ensemble.position(p, node.index);
                for (int i = 0; i < d; ++i) x[i] = node.shift[i] + end[i] - start[i];
                per_path[p] += node.weight * f(node.time, std::span<const double>(x.data(), d));
            }
        }
        out.push_back(detail::summarize(per_path));
    }
    return out;
}

}  // namespace degpar::reference
