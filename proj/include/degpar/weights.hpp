#pragma once

// Time weights on the line and a dyadic lower estimate of their Muckenhoupt
// constant
//
//     [w]_{A_q} = sup_I (avg_I w) (avg_I w^{-1/(q-1)})^{q-1}.

#include "degpar/profiles.hpp"

#include <string>
#include <vector>

namespace degpar {

enum class WeightForm { constant, power, tabulated };

class Weight {
public:
    /// w = 1.
    static Weight constant();
    /// w = amplitude |t|^beta (beta finite, amplitude > 0). Admissibility in
    /// A_q is not checked here; see check_power_admissible.
    static Weight power(double beta, double amplitude = 1.0);
    /// Piecewise constant: values[i] on [knots[i], knots[i+1]); values[0]
    /// extends to -inf and values.back() to +inf. Values must be > 0.
    static Weight tabulated(std::vector<double> knots, std::vector<double> values);
    /// (t, w) pairs, one per line, comma separated; '#' starts a comment.
    static Weight from_csv(const std::string& path);

    WeightForm form() const noexcept { return form_; }
    double beta() const noexcept { return beta_; }
    double amplitude() const noexcept { return amplitude_; }
    const std::vector<double>& knots() const noexcept { return knots_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::string describe() const;

    double operator()(double t) const;
    /// int_a^b w^r for a <= b; +inf when w^r is not integrable there.
    double integral(double a, double b, double r) const;
    /// t -> w(lambda t).
    Weight dilated(double lambda) const;

private:
    WeightForm form_ = WeightForm::constant;
    double beta_ = 0.0;
    double amplitude_ = 1.0;
    std::vector<double> knots_;
    std::vector<double> values_;
};

/// Throws Error{admissibility} unless -1 < beta < q - 1.
void check_power_admissible(double beta, double q);

struct AqEstimate {
    double value = 1.0;
    bool divergent = false;
    int levels = 0;
};

inline constexpr double kAqOverflowCap = 1e12;

/// Max of the A_q functional over the dyadic subintervals of [a, b] down to
/// `levels` halvings. Divergent (value +inf) when some average is infinite or
/// exceeds kAqOverflowCap. Parallel over intervals of each level.
AqEstimate aq_constant(const Weight& w, double q, double a, double b, int levels);

namespace reference {
AqEstimate aq_constant(const Weight& w, double q, double a, double b, int levels);
}  // namespace reference

/// w(alpha(t) + eps t).
double weight_at_alpha(const Weight& w, const CoefficientProfile& profile, double t,
                       double epsilon = 0.0);

}  // namespace degpar
