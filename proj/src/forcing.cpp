#include "degpar/forcing.hpp"

#include "degpar/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace degpar {

double TimeFactor::value(double t) const {
    if (!window.contains(t)) return 0.0;
    if (exponent == 0.0) return scale;
    return scale * std::pow(t, exponent);
}

Forcing::Forcing(int dimension, std::vector<ForcingComponent> components)
    : dimension_(dimension), components_(std::move(components)) {
    if (dimension_ < 1 || dimension_ > 3) {
        throw Error(ErrorKind::invalid_argument, "forcing dimension must be 1, 2 or 3");
    }
    for (const auto& c : components_) {
        if (!(c.bump.variance > 0.0)) {
            throw Error(ErrorKind::invalid_argument, "bump variance must be positive");
        }
        if (!(c.time.exponent > -1.0)) {
            throw Error(ErrorKind::invalid_argument, "time exponent must exceed -1");
        }
        if (!(c.time.window.begin < c.time.window.end) || c.time.window.begin < 0.0) {
            throw Error(ErrorKind::invalid_argument, "time window must satisfy 0 <= t0 < t1");
        }
    }
}

double Forcing::bump_value(const GaussianBump& bump, std::span<const double> x) const {
    const double norm = std::pow(2.0 * std::numbers::pi * bump.variance, -0.5 * dimension_);
    if (!halfwidth_) {
        double r2 = 0.0;
        for (int i = 0; i < dimension_; ++i) {
            const double dx = x[i] - bump.center[i];
            r2 += dx * dx;
        }
        return bump.amplitude * norm * std::exp(-0.5 * r2 / bump.variance);
    }
    // nearest image of x - center in [-L, L), plus `image_reach_` rings
    const double period = 2.0 * *halfwidth_;
    std::array<double, 3> base{};
    for (int i = 0; i < dimension_; ++i) {
        double dx = x[i] - bump.center[i];
        dx -= period * std::floor((dx + *halfwidth_) / period);
        base[i] = dx;
    }
    const int reach = image_reach_;
    double total = 0.0;
    const int span = 2 * reach + 1;
    int cells = 1;
    for (int i = 0; i < dimension_; ++i) cells *= span;
    for (int cell = 0; cell < cells; ++cell) {
        int code = cell;
        double r2 = 0.0;
        for (int i = 0; i < dimension_; ++i) {
            const int shift = code % span - reach;
            code /= span;
            const double dx = base[i] + period * shift;
            r2 += dx * dx;
        }
        total += std::exp(-0.5 * r2 / bump.variance);
    }
    return bump.amplitude * norm * total;
}

double Forcing::operator()(double t, std::span<const double> x) const {
    double total = 0.0;
    for (const auto& c : components_) {
        const double tf = c.time.value(t);
        if (tf != 0.0) total += tf * bump_value(c.bump, x);
    }
    return total;
}

Forcing Forcing::periodized(double halfwidth) const {
    if (!(halfwidth > 0.0)) throw Error(ErrorKind::invalid_argument, "halfwidth must be positive");
    Forcing out = *this;
    out.halfwidth_ = halfwidth;
    // images beyond distance r contribute below exp(-r^2 / 2v); stop at 1e-18
    double max_variance = 0.0;
    for (const auto& c : components_) max_variance = std::max(max_variance, c.bump.variance);
    const double reach_distance = std::sqrt(2.0 * max_variance * 41.5);
    // ring k of images sits at distance >= (2k - 1) L from any point of the box
    const double rings = 0.5 * (reach_distance / halfwidth + 1.0);
    out.image_reach_ = std::max(0, static_cast<int>(std::ceil(rings)) - 1);
    return out;
}

Forcing Forcing::rescaled(double lambda) const {
    if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "lambda must be positive");
    Forcing out = *this;
    for (auto& c : out.components_) {
        c.time.window.begin /= lambda;
        c.time.window.end /= lambda;
        c.time.scale *= std::pow(lambda, 1.0 + c.time.exponent);
    }
    return out;
}

double Forcing::support_radius() const {
    double radius = 0.0;
    for (const auto& c : components_) {
        double r2 = 0.0;
        for (int i = 0; i < dimension_; ++i) r2 += c.bump.center[i] * c.bump.center[i];
        radius = std::max(radius, std::sqrt(r2) + 8.0 * std::sqrt(c.bump.variance));
    }
    return radius;
}

}  // namespace degpar
