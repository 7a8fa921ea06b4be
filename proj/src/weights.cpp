#include "degpar/weights.hpp"

#include "degpar/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace degpar {

namespace {

// int_0^x |t|^g sign-aware primitive, g > -1.
double power_primitive(double x, double g) {
    const double m = std::pow(std::abs(x), g + 1.0) / (g + 1.0);
    return x < 0.0 ? -m : m;
}

}  // namespace

Weight Weight::constant() { return Weight{}; }

Weight Weight::power(double beta, double amplitude) {
    if (!std::isfinite(beta)) throw Error(ErrorKind::invalid_argument, "power weight beta must be finite");
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
        throw Error(ErrorKind::invalid_argument, "power weight amplitude must be positive");
    }
    Weight w;
    w.form_ = WeightForm::power;
    w.beta_ = beta;
    w.amplitude_ = amplitude;
    return w;
}

Weight Weight::tabulated(std::vector<double> knots, std::vector<double> values) {
    if (knots.empty() || knots.size() != values.size()) {
        throw Error(ErrorKind::invalid_argument, "tabulated weight needs matching non-empty samples");
    }
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!std::isfinite(knots[i]) || (i > 0 && !(knots[i] > knots[i - 1]))) {
            throw Error(ErrorKind::invalid_argument, "tabulated weight knots must increase strictly");
        }
        if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
            throw Error(ErrorKind::invalid_argument, "tabulated weight values must be positive");
        }
    }
    Weight w;
    w.form_ = WeightForm::tabulated;
    w.knots_ = std::move(knots);
    w.values_ = std::move(values);
    return w;
}

Weight Weight::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open weight samples " + path);
    std::vector<double> knots;
    std::vector<double> values;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double t = 0.0;
        double v = 0.0;
        if (!(fields >> t >> v)) {
            // a non-numeric first line is a header
            if (knots.empty() && lineno == 1) continue;
            throw Error(ErrorKind::config, path + ":" + std::to_string(lineno) + ": expected t,w");
        }
        knots.push_back(t);
        values.push_back(v);
    }
    return tabulated(std::move(knots), std::move(values));
}

std::string Weight::describe() const {
    std::ostringstream out;
    switch (form_) {
        case WeightForm::constant: out << "constant"; break;
        case WeightForm::power:
            out << "power(beta=" << beta_;
            if (amplitude_ != 1.0) out << ",amplitude=" << amplitude_;
            out << ")";
            break;
        case WeightForm::tabulated: out << "tabulated(" << knots_.size() << ")"; break;
    }
    return out.str();
}

double Weight::operator()(double t) const {
    switch (form_) {
        case WeightForm::constant: return 1.0;
        case WeightForm::power:
            if (t == 0.0) return beta_ > 0.0 ? 0.0 : (beta_ == 0.0 ? amplitude_ : kInfinity);
            return amplitude_ * std::pow(std::abs(t), beta_);
        case WeightForm::tabulated: {
            const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
            const auto i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
            return values_[i];
        }
    }
    return 1.0;
}

double Weight::integral(double a, double b, double r) const {
    if (!(a <= b)) throw Error(ErrorKind::invalid_argument, "integral needs a <= b");
    if (a == b) return 0.0;
    switch (form_) {
        case WeightForm::constant: return b - a;
        case WeightForm::power: {
            const double g = beta_ * r;
            const double scale = std::pow(amplitude_, r);
            if (g <= -1.0 && a <= 0.0 && b >= 0.0) return kInfinity;
            if (g == -1.0) {
                // interval avoids 0 and lies on one side of it
                return scale * std::abs(std::log(std::abs(b) / std::abs(a)));
            }
            if (g < -1.0) {
                return scale * std::abs(power_primitive(b, g) - power_primitive(a, g));
            }
            return scale * (power_primitive(b, g) - power_primitive(a, g));
        }
        case WeightForm::tabulated: {
            double total = 0.0;
            const std::size_t n = knots_.size();
            for (std::size_t i = 0; i <= n; ++i) {
                const double lo = i == 0 ? -kInfinity : knots_[i - 1];
                const double hi = i == n ? kInfinity : knots_[i];
                const double value = values_[i == 0 ? 0 : i - 1];
                const double from = std::max(a, lo);
                const double to = std::min(b, hi);
                if (to > from) total += std::pow(value, r) * (to - from);
            }
            return total;
        }
    }
    return 0.0;
}

Weight Weight::dilated(double lambda) const {
    if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "dilation factor must be positive");
    switch (form_) {
        case WeightForm::constant: return *this;
        case WeightForm::power: return power(beta_, amplitude_ * std::pow(lambda, beta_));
        case WeightForm::tabulated: {
            std::vector<double> knots = knots_;
            for (double& k : knots) k /= lambda;
            return tabulated(std::move(knots), values_);
        }
    }
    return *this;
}

void check_power_admissible(double beta, double q) {
    if (!(q > 1.0) || !std::isfinite(q)) {
        throw Error(ErrorKind::admissibility, "q must lie in (1, inf)");
    }
    if (!(beta > -1.0 && beta < q - 1.0)) {
        std::ostringstream msg;
        msg << "beta_w = " << beta << " outside (-1, q - 1) = (-1, " << q - 1.0 << ")";
        throw Error(ErrorKind::admissibility, msg.str());
    }
}

namespace detail {

// (avg w)(avg w^{-1/(q-1)})^{q-1} on [lo, hi]; +inf when either diverges.
double aq_functional(const Weight& w, double q, double lo, double hi) {
    const double len = hi - lo;
    const double avg_w = w.integral(lo, hi, 1.0) / len;
    const double avg_dual = w.integral(lo, hi, -1.0 / (q - 1.0)) / len;
    if (!std::isfinite(avg_w) || !std::isfinite(avg_dual)) return kInfinity;
    return avg_w * std::pow(avg_dual, q - 1.0);
}

void check_aq_arguments(double q, double a, double b, int levels) {
    if (!(q > 1.0) || !std::isfinite(q)) throw Error(ErrorKind::invalid_argument, "q must lie in (1, inf)");
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
        throw Error(ErrorKind::invalid_argument, "A_q domain must be a bounded interval");
    }
    if (levels < 1 || levels > 30) throw Error(ErrorKind::invalid_argument, "levels must lie in [1, 30]");
}

AqEstimate finish(double best, int levels) {
    AqEstimate out;
    out.levels = levels;
    if (!(best <= kAqOverflowCap)) {
        out.value = kInfinity;
        out.divergent = true;
    } else {
        out.value = best;
    }
    return out;
}

}  // namespace detail

AqEstimate aq_constant(const Weight& w, double q, double a, double b, int levels) {
    detail::check_aq_arguments(q, a, b, levels);
    double best = 0.0;
    for (int level = 0; level <= levels; ++level) {
        const long long count = 1LL << level;
        const double len = (b - a) / static_cast<double>(count);
        double level_best = 0.0;
#pragma omp parallel for reduction(max : level_best) schedule(static)
        for (long long j = 0; j < count; ++j) {
            const double lo = a + static_cast<double>(j) * len;
            const double hi = j + 1 == count ? b : lo + len;
            level_best = std::max(level_best, detail::aq_functional(w, q, lo, hi));
        }
        best = std::max(best, level_best);
        if (!(best <= kAqOverflowCap)) break;
    }
    return detail::finish(best, levels);
}

double weight_at_alpha(const Weight& w, const CoefficientProfile& profile, double t, double epsilon) {
    if (!(epsilon >= 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be >= 0");
    return w(profile.alpha(t) + epsilon * t);
}

}  // namespace degpar
