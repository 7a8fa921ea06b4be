#include "degpar/error.hpp"
#include "degpar/field.hpp"

namespace degpar::reference {

SpaceTimeField solve_exact(const SpaceTimeField& f, const CoefficientProfile& profile) {
    if (f.grid().dimension != profile.dimension()) {
        throw Error(ErrorKind::invalid_argument, "field and profile dimensions differ");
    }
    const TimeGrid tg = midpoint_time_grid(f);
    const auto nodes = tg.nodes();
    const auto mids = tg.midpoints();
    SpaceTimeField u(f.grid(), nodes);
    for (int m = 1; m <= tg.cells; ++m) {
        auto target = u.slice(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) {
            const auto moved = apply_kernel(f.grid(), f.slice(static_cast<std::size_t>(k)),
                                            KernelSpec::between(profile, mids[k], nodes[m]));
            for (std::size_t i = 0; i < moved.size(); ++i) target[i] += tg.step() * moved[i];
        }
    }
    return u;
}

}  // namespace degpar::reference
