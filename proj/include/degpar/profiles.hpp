#pragma once

// Time-dependent coefficient triples (A(t), b(t), c(t)) of
//
//     u_t = a^{ij}(t) u_{x^i x^j} + b^i(t) u_{x^i} + c(t) u + f,   u(0, .) = 0,
//
// built from primitive terms with closed-form antiderivatives, together with
// the degeneracy function delta(t) = lambda_min(A(t)), the time change
// alpha(t) = int_0^t delta and its generalized inverse.

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace degpar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kEigenClamp = 1e-12;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class TermKind { constant, monomial, power, cosine, sine };

/// Half-open time interval [begin, end); `end` may be +inf.
struct TimeSupport {
    double begin = 0.0;
    double end = kInfinity;

    bool contains(double t) const noexcept { return t >= begin && t < end; }
    bool overlaps(const TimeSupport& other) const noexcept {
        return begin < other.end && other.begin < end;
    }
};

/// Scalar time factor of a primitive term: 1, t^k, t^gamma, cos(omega t) or
/// sin(omega t), restricted to its support.
struct TimeBasis {
    TermKind kind = TermKind::constant;
    double exponent = 0.0;   // k for monomial, gamma in (-1, 0) for power
    double frequency = 0.0;  // omega for cosine / sine

    double value(double t) const;
    /// Primitive F with F(0) = 0 (exists for every admissible exponent).
    double primitive(double t) const;
    /// int_s^t of the factor restricted to `support`.
    double integral(const TimeSupport& support, double s, double t) const;
    bool nonnegative() const noexcept {
        return kind != TermKind::cosine && kind != TermKind::sine;
    }
    bool singular_at_zero() const noexcept {
        return kind == TermKind::power && exponent < 0.0;
    }
    bool same_family(const TimeBasis& other) const noexcept {
        return kind == other.kind && exponent == other.exponent && frequency == other.frequency;
    }
};

template <typename Coefficient>
struct PrimitiveTerm {
    TimeBasis basis;
    TimeSupport support;
    Coefficient coefficient;
};

using MatrixTerm = PrimitiveTerm<Matrix>;
using VectorTerm = PrimitiveTerm<Vector>;
using ScalarTerm = PrimitiveTerm<double>;

TimeBasis constant_basis();
TimeBasis monomial_basis(int k);
TimeBasis power_basis(double gamma);
TimeBasis cosine_basis(double omega);
TimeBasis sine_basis(double omega);

class CoefficientProfile;

/// delta, alpha_eps and beta_eps of a profile for a fixed epsilon shift.
/// Holds a reference; the profile must outlive the trace.
class DegeneracyTrace {
public:
    DegeneracyTrace(const CoefficientProfile& profile, double epsilon);

    double delta(double t) const;
    double alpha(double t) const;
    double beta(double s) const;
    double epsilon() const noexcept { return epsilon_; }

private:
    const CoefficientProfile* profile_;
    double epsilon_;
};

class CoefficientProfile {
public:
    /// Symmetrizes the matrix coefficients and validates PSD-ness of A(t) on a
    /// dense sample of (0, horizon]; throws Error{not_psd} otherwise.
    CoefficientProfile(int dimension, double horizon, std::vector<MatrixTerm> a_terms,
                       std::vector<VectorTerm> b_terms = {}, std::vector<ScalarTerm> c_terms = {},
                       std::string id = {});

    int dimension() const noexcept { return dimension_; }
    double horizon() const noexcept { return horizon_; }
    const std::string& id() const noexcept { return id_; }
    const std::vector<MatrixTerm>& a_terms() const noexcept { return a_terms_; }
    const std::vector<VectorTerm>& b_terms() const noexcept { return b_terms_; }
    const std::vector<ScalarTerm>& c_terms() const noexcept { return c_terms_; }
    bool has_lower_order() const noexcept { return !b_terms_.empty() || !c_terms_.empty(); }

    Matrix a(double t) const;
    Vector b(double t) const;
    double c(double t) const;

    /// Smallest eigenvalue of A(t), clamped below at 0.
    double delta_of(double t) const;
    /// alpha_eps(t) = int_0^t (delta + eps).
    double alpha(double t, double epsilon = 0.0) const;
    /// eps > 0: the root of alpha_eps(t) = s. eps = 0: inf{t : alpha(t) > s}
    /// (right-continuous across plateaus), or the horizon if no such t.
    double beta(double s, double epsilon = 0.0) const;
    DegeneracyTrace trace(double epsilon = 0.0) const { return DegeneracyTrace(*this, epsilon); }
    /// True when every piece of delta has a closed-form antiderivative.
    bool delta_closed_form() const noexcept;

    /// Sigma(s, t) = 2 int_s^t A(r) dr.
    Matrix integral_matrix(double s, double t) const;
    Vector integral_vector(double s, double t) const;
    double integral_scalar(double s, double t) const;

    /// Smallest delta over the dense validation sample of (0, horizon].
    double min_delta() const;

    /// lambda * (A, b, c)(lambda t) on horizon / lambda.
    CoefficientProfile rescaled(double lambda) const;
    CoefficientProfile with_horizon(double horizon) const;
    CoefficientProfile with_lower_order(std::vector<VectorTerm> b_terms,
                                        std::vector<ScalarTerm> c_terms, std::string id) const;
    CoefficientProfile without_lower_order() const;

    /// Sorted sample points used for PSD validation and min_delta.
    const std::vector<double>& validation_sample() const noexcept { return sample_; }

private:
    struct DeltaPiece {
        double begin = 0.0;
        double end = 0.0;
        bool closed_form = false;
        // closed form: delta(t) = sum_i weights[i] * bases[i](t) on the piece
        std::vector<TimeBasis> bases;
        std::vector<double> weights;
        double alpha_at_begin = 0.0;
    };

    void build_pieces();
    const DeltaPiece& piece_for(double t) const;
    double delta_piece_integral(const DeltaPiece& piece, double s, double t) const;

    int dimension_;
    double horizon_;
    std::vector<MatrixTerm> a_terms_;
    std::vector<VectorTerm> b_terms_;
    std::vector<ScalarTerm> c_terms_;
    std::string id_;
    std::vector<DeltaPiece> pieces_;
    std::vector<double> sample_;
    double min_delta_ = 0.0;
};

/// Symmetric PSD square root S (S * S^T = M). Eigenvalues in [-1e-12, 0) are
/// clamped to zero; anything below throws Error{not_psd}.
Matrix matrix_sqrt_psd(const Matrix& m);

/// Smallest eigenvalue of the symmetric part of `m`.
double min_eigenvalue(const Matrix& m);

}  // namespace degpar
