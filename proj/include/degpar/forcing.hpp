#pragma once

#include "degpar/profiles.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace degpar {

using SpacePoint = std::array<double, 3>;

/// amplitude * N(center, variance * I) density.
struct GaussianBump {
    double amplitude = 1.0;
    SpacePoint center{0.0, 0.0, 0.0};
    double variance = 1.0;
};

/// scale * t^exponent on a time window; exponent 0 gives a plain window.
struct TimeFactor {
    TimeSupport window{};
    double exponent = 0.0;
    double scale = 1.0;

    double value(double t) const;
};

struct ForcingComponent {
    GaussianBump bump;
    TimeFactor time;
};

/// Separable symbolic forcing f(t, x) = sum_i time_i(t) * bump_i(x). An
/// empty component list is f = 0. Optionally periodized on [-L, L)^d.
class Forcing {
public:
    Forcing() = default;
    Forcing(int dimension, std::vector<ForcingComponent> components);

    int dimension() const noexcept { return dimension_; }
    const std::vector<ForcingComponent>& components() const noexcept { return components_; }
    bool is_zero() const noexcept { return components_.empty(); }
    std::optional<double> period_halfwidth() const noexcept { return halfwidth_; }

    double operator()(double t, std::span<const double> x) const;

    /// Same forcing with x taken modulo the box [-L, L)^d (image sum).
    Forcing periodized(double halfwidth) const;
    /// lambda * f(lambda t, x).
    Forcing rescaled(double lambda) const;
    /// Largest |center| + 8 sqrt(variance) over the components.
    double support_radius() const;

private:
    double bump_value(const GaussianBump& bump, std::span<const double> x) const;

    int dimension_ = 1;
    std::vector<ForcingComponent> components_;
    std::optional<double> halfwidth_;
    int image_reach_ = 0;
};

}  // namespace degpar
