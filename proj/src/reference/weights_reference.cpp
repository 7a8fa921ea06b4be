// Serial dyadic sweep, interval by interval in level order.

#include "degpar/weights.hpp"

#include <algorithm>

namespace degpar::detail {
double aq_functional(const Weight& w, double q, double lo, double hi);
void check_aq_arguments(double q, double a, double b, int levels);
AqEstimate finish(double best, int levels);
}  // namespace degpar::detail

namespace degpar::reference {

AqEstimate aq_constant(const Weight& w, double q, double a, double b, int levels) {
    detail::check_aq_arguments(q, a, b, levels);
    double best = 0.0;
    for (int level = 0; level <= levels; ++level) {
        const long long count = 1LL << level;
        const double len = (b - a) / static_cast<double>(count);
        for (long long j = 0; j < count; ++j) {
            const double lo = a + static_cast<double>(j) * len;
            const double hi = j + 1 == count ? b : lo + len;
            best = std::max(best, detail::aq_functional(w, q, lo, hi));
        }
    }
    return detail::finish(best, levels);
}

}  // namespace degpar::reference
