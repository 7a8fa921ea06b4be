#include "degpar/profiles.hpp"

#include "degpar/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace degpar {

namespace {

constexpr std::size_t kValidationPoints = 2048;
constexpr double kAlphaQuadratureTol = 1e-10;

double clamp_to(double t, const TimeSupport& support) {
    return std::min(std::max(t, support.begin), support.end);
}

bool is_isotropic(const Matrix& m) {
    const auto d = m.rows();
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i != j && m(i, j) != 0.0) return false;
        }
        if (m(i, i) != m(0, 0)) return false;
    }
    return true;
}

template <typename Coefficient>
void check_disjoint(const std::vector<PrimitiveTerm<Coefficient>>& terms, const char* target) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            if (terms[i].basis.same_family(terms[j].basis) &&
                terms[i].support.overlaps(terms[j].support)) {
                std::ostringstream msg;
                msg << "overlapping supports for two '" << target
                    << "' terms of the same kind; merge them into one term";
                throw Error(ErrorKind::invalid_argument, msg.str());
            }
        }
    }
}

template <typename Coefficient>
void check_basis(const std::vector<PrimitiveTerm<Coefficient>>& terms) {
    for (const auto& term : terms) {
        const auto& b = term.basis;
        if (b.kind == TermKind::monomial &&
            (b.exponent < 0.0 || b.exponent != std::floor(b.exponent))) {
            throw Error(ErrorKind::invalid_argument, "monomial exponent must be a natural number");
        }
        if (b.kind == TermKind::power && !(b.exponent > -1.0)) {
            throw Error(ErrorKind::invalid_argument,
                        "power exponent must exceed -1 for local integrability");
        }
        if ((b.kind == TermKind::cosine || b.kind == TermKind::sine) &&
            !(std::isfinite(b.frequency) && b.frequency != 0.0)) {
            throw Error(ErrorKind::invalid_argument, "trigonometric term needs a nonzero frequency");
        }
        if (!(term.support.begin >= 0.0) || !(term.support.begin < term.support.end)) {
            throw Error(ErrorKind::invalid_argument, "term support must satisfy 0 <= t0 < t1");
        }
    }
}

template <typename Coefficient>
PrimitiveTerm<Coefficient> rescale_term(const PrimitiveTerm<Coefficient>& term, double lambda) {
    PrimitiveTerm<Coefficient> out = term;
    out.support.begin = term.support.begin / lambda;
    out.support.end = term.support.end / lambda;
    double factor = lambda;
    switch (term.basis.kind) {
        case TermKind::constant:
            break;
        case TermKind::monomial:
        case TermKind::power:
            factor = std::pow(lambda, term.basis.exponent + 1.0);
            break;
        case TermKind::cosine:
        case TermKind::sine:
            out.basis.frequency = term.basis.frequency * lambda;
            break;
    }
    out.coefficient = term.coefficient * factor;
    return out;
}

}  // namespace

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid argument";
        case ErrorKind::singular_evaluation: return "singular evaluation";
        case ErrorKind::not_psd: return "not positive semidefinite";
        case ErrorKind::out_of_range: return "out of range";
        case ErrorKind::floor_too_large: return "floor too large";
        case ErrorKind::query_outside_grid: return "query outside grid";
        case ErrorKind::admissibility: return "admissibility";
        case ErrorKind::config: return "config error";
        case ErrorKind::io: return "i/o error";
    }
    return "error";
}

TimeBasis constant_basis() { return {TermKind::constant, 0.0, 0.0}; }
TimeBasis monomial_basis(int k) { return {TermKind::monomial, static_cast<double>(k), 0.0}; }
TimeBasis power_basis(double gamma) { return {TermKind::power, gamma, 0.0}; }
TimeBasis cosine_basis(double omega) { return {TermKind::cosine, 0.0, omega}; }
TimeBasis sine_basis(double omega) { return {TermKind::sine, 0.0, omega}; }

double TimeBasis::value(double t) const {
    switch (kind) {
        case TermKind::constant: return 1.0;
        case TermKind::monomial: return exponent == 0.0 ? 1.0 : std::pow(t, exponent);
        case TermKind::power:
            if (t == 0.0 && exponent < 0.0) return kInfinity;
            return std::pow(t, exponent);
        case TermKind::cosine: return std::cos(frequency * t);
        case TermKind::sine: return std::sin(frequency * t);
    }
    return 0.0;
}

double TimeBasis::primitive(double t) const {
    switch (kind) {
        case TermKind::constant: return t;
        case TermKind::monomial:
        case TermKind::power: return std::pow(t, exponent + 1.0) / (exponent + 1.0);
        case TermKind::cosine: return std::sin(frequency * t) / frequency;
        case TermKind::sine: return (1.0 - std::cos(frequency * t)) / frequency;
    }
    return 0.0;
}

double TimeBasis::integral(const TimeSupport& support, double s, double t) const {
    if (s > t) return -integral(support, t, s);
    const double lo = clamp_to(s, support);
    const double hi = clamp_to(t, support);
    if (!(hi > lo)) return 0.0;
    return primitive(hi) - primitive(lo);
}

DegeneracyTrace::DegeneracyTrace(const CoefficientProfile& profile, double epsilon)
    : profile_(&profile), epsilon_(epsilon) {
    if (!(epsilon >= 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be >= 0");
}

double DegeneracyTrace::delta(double t) const { return profile_->delta_of(t) + epsilon_; }
double DegeneracyTrace::alpha(double t) const { return profile_->alpha(t, epsilon_); }
double DegeneracyTrace::beta(double s) const { return profile_->beta(s, epsilon_); }

CoefficientProfile::CoefficientProfile(int dimension, double horizon,
                                       std::vector<MatrixTerm> a_terms,
                                       std::vector<VectorTerm> b_terms,
                                       std::vector<ScalarTerm> c_terms, std::string id)
    : dimension_(dimension),
      horizon_(horizon),
      a_terms_(std::move(a_terms)),
      b_terms_(std::move(b_terms)),
      c_terms_(std::move(c_terms)),
      id_(std::move(id)) {
    if (dimension_ < 1 || dimension_ > 3) {
        throw Error(ErrorKind::invalid_argument, "dimension must be 1, 2 or 3");
    }
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
        throw Error(ErrorKind::invalid_argument, "horizon must be positive and finite");
    }
    check_basis(a_terms_);
    check_basis(b_terms_);
    check_basis(c_terms_);
    for (auto& term : a_terms_) {
        if (term.coefficient.rows() != dimension_ || term.coefficient.cols() != dimension_) {
            throw Error(ErrorKind::invalid_argument, "matrix coefficient must be d x d");
        }
        if (!term.coefficient.allFinite()) {
            throw Error(ErrorKind::invalid_argument, "matrix coefficient must be finite");
        }
        const Matrix sym = 0.5 * (term.coefficient + term.coefficient.transpose());
        term.coefficient = sym;
    }
    for (const auto& term : b_terms_) {
        if (term.coefficient.size() != dimension_ || !term.coefficient.allFinite()) {
            throw Error(ErrorKind::invalid_argument, "vector coefficient must be a finite d-vector");
        }
    }
    for (const auto& term : c_terms_) {
        if (!std::isfinite(term.coefficient)) {
            throw Error(ErrorKind::invalid_argument, "scalar coefficient must be finite");
        }
    }
    check_disjoint(a_terms_, "a");
    check_disjoint(b_terms_, "b");
    check_disjoint(c_terms_, "c");

    sample_.reserve(kValidationPoints + 2 * a_terms_.size() + 1);
    for (std::size_t i = 0; i < kValidationPoints; ++i) {
        sample_.push_back(horizon_ * (static_cast<double>(i) + 0.5) /
                          static_cast<double>(kValidationPoints));
    }
    sample_.push_back(horizon_);
    for (const auto& term : a_terms_) {
        for (double edge : {term.support.begin, term.support.end}) {
            if (edge > 0.0 && edge < horizon_) {
                sample_.push_back(edge);
                sample_.push_back(std::nextafter(edge, 0.0));
            }
        }
    }
    std::sort(sample_.begin(), sample_.end());
    sample_.erase(std::unique(sample_.begin(), sample_.end()), sample_.end());

    min_delta_ = kInfinity;
    for (double t : sample_) {
        const double lambda = min_eigenvalue(a(t));
        if (lambda < -kEigenClamp) {
            std::ostringstream msg;
            msg << "A(t) has eigenvalue " << lambda << " at t = " << t;
            throw Error(ErrorKind::not_psd, msg.str());
        }
        min_delta_ = std::min(min_delta_, std::max(lambda, 0.0));
    }
    build_pieces();
}

Matrix CoefficientProfile::a(double t) const {
    Matrix out = Matrix::Zero(dimension_, dimension_);
    for (const auto& term : a_terms_) {
        if (!term.support.contains(t)) continue;
        const double v = term.basis.value(t);
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "matrix term diverges at t = " << t;
            throw Error(ErrorKind::singular_evaluation, msg.str());
        }
        out += v * term.coefficient;
    }
    return out;
}

Vector CoefficientProfile::b(double t) const {
    Vector out = Vector::Zero(dimension_);
    for (const auto& term : b_terms_) {
        if (term.support.contains(t)) out += term.basis.value(t) * term.coefficient;
    }
    return out;
}

double CoefficientProfile::c(double t) const {
    double out = 0.0;
    for (const auto& term : c_terms_) {
        if (term.support.contains(t)) out += term.basis.value(t) * term.coefficient;
    }
    return out;
}

double CoefficientProfile::delta_of(double t) const {
    return std::max(min_eigenvalue(a(t)), 0.0);
}

void CoefficientProfile::build_pieces() {
    std::vector<double> edges{0.0, horizon_};
    for (const auto& term : a_terms_) {
        for (double edge : {term.support.begin, term.support.end}) {
            if (edge > 0.0 && edge < horizon_) edges.push_back(edge);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    pieces_.clear();
    double cumulative = 0.0;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        DeltaPiece piece;
        piece.begin = edges[k];
        piece.end = edges[k + 1];
        const double mid = 0.5 * (piece.begin + piece.end);
        int anisotropic = 0;
        bool closed = true;
        for (const auto& term : a_terms_) {
            if (!term.support.contains(mid)) continue;
            if (is_isotropic(term.coefficient)) {
                piece.bases.push_back(term.basis);
                piece.weights.push_back(term.coefficient(0, 0));
            } else {
                ++anisotropic;
                if (!term.basis.nonnegative()) closed = false;
                piece.bases.push_back(term.basis);
                piece.weights.push_back(min_eigenvalue(term.coefficient));
            }
        }
        piece.closed_form = closed && anisotropic <= 1;
        if (!piece.closed_form) {
            piece.bases.clear();
            piece.weights.clear();
        }
        piece.alpha_at_begin = cumulative;
        pieces_.push_back(std::move(piece));
        cumulative += delta_piece_integral(pieces_.back(), pieces_.back().begin, pieces_.back().end);
    }
}

const CoefficientProfile::DeltaPiece& CoefficientProfile::piece_for(double t) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                               [](double value, const DeltaPiece& p) { return value < p.begin; });
    if (it == pieces_.begin()) return pieces_.front();
    return *(it - 1);
}

double CoefficientProfile::delta_piece_integral(const DeltaPiece& piece, double s, double t) const {
    if (!(t > s)) return 0.0;
    if (piece.closed_form) {
        double total = 0.0;
        for (std::size_t i = 0; i < piece.bases.size(); ++i) {
            total += piece.weights[i] * (piece.bases[i].primitive(t) - piece.bases[i].primitive(s));
        }
        return std::max(total, 0.0);
    }
    using boost::math::quadrature::gauss_kronrod;
    // integrate on [0, 1]: boost's error estimate has an absolute floor that
    // never meets a relative tolerance on very short intervals
    const double width = t - s;
    auto integrand = [this, s, width](double x) { return delta_of(s + width * x); };
    return width * gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 15, kAlphaQuadratureTol);
}

bool CoefficientProfile::delta_closed_form() const noexcept {
    return std::all_of(pieces_.begin(), pieces_.end(),
                       [](const DeltaPiece& p) { return p.closed_form; });
}

double CoefficientProfile::alpha(double t, double epsilon) const {
    if (!(t >= 0.0) || t > horizon_ * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "alpha evaluated at t = " << t << " outside [0, " << horizon_ << "]";
        throw Error(ErrorKind::out_of_range, msg.str());
    }
    t = std::min(t, horizon_);
    const DeltaPiece& piece = piece_for(t);
    return piece.alpha_at_begin + delta_piece_integral(piece, piece.begin, t) + epsilon * t;
}

double CoefficientProfile::beta(double s, double epsilon) const {
    if (!(epsilon >= 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be >= 0");
    const double top = alpha(horizon_, epsilon);
    if (!(s >= 0.0) || s > top * (1.0 + 1e-12) + 1e-15) {
        std::ostringstream msg;
        msg << "beta argument " << s << " outside [0, alpha_eps(T) = " << top << "]";
        throw Error(ErrorKind::out_of_range, msg.str());
    }
    if (epsilon == 0.0 && !(top > s)) return horizon_;
    double lo = 0.0;
    double hi = horizon_;
    // invariant: alpha_eps(lo) <= s < alpha_eps(hi) (eps = 0), or
    //            alpha_eps(lo) <= s <= alpha_eps(hi) (eps > 0)
    for (int it = 0; it < 2000; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (!(mid > lo) || !(mid < hi)) break;
        const double value = alpha(mid, epsilon);
        if (value > s || (epsilon > 0.0 && value == s)) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo <= 1e-12 * std::max(1.0, horizon_) &&
            alpha(hi, epsilon) - alpha(lo, epsilon) <= 1e-13 * std::max(1.0, s)) {
            break;
        }
    }
    return epsilon > 0.0 ? 0.5 * (lo + hi) : hi;
}

Matrix CoefficientProfile::integral_matrix(double s, double t) const {
    Matrix out = Matrix::Zero(dimension_, dimension_);
    for (const auto& term : a_terms_) {
        const double w = term.basis.integral(term.support, s, t);
        if (w != 0.0) out += (2.0 * w) * term.coefficient;
    }
    return out;
}

Vector CoefficientProfile::integral_vector(double s, double t) const {
    Vector out = Vector::Zero(dimension_);
    for (const auto& term : b_terms_) {
        const double w = term.basis.integral(term.support, s, t);
        if (w != 0.0) out += w * term.coefficient;
    }
    return out;
}

double CoefficientProfile::integral_scalar(double s, double t) const {
    double out = 0.0;
    for (const auto& term : c_terms_) {
        out += term.basis.integral(term.support, s, t) * term.coefficient;
    }
    return out;
}

double CoefficientProfile::min_delta() const { return min_delta_; }

CoefficientProfile CoefficientProfile::rescaled(double lambda) const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorKind::invalid_argument, "rescaling factor must be positive");
    }
    std::vector<MatrixTerm> a;
    std::vector<VectorTerm> b;
    std::vector<ScalarTerm> c;
    for (const auto& t : a_terms_) a.push_back(rescale_term(t, lambda));
    for (const auto& t : b_terms_) b.push_back(rescale_term(t, lambda));
    for (const auto& t : c_terms_) c.push_back(rescale_term(t, lambda));
    std::ostringstream id;
    id << id_ << "@lambda=" << lambda;
    return CoefficientProfile(dimension_, horizon_ / lambda, std::move(a), std::move(b),
                              std::move(c), id.str());
}

CoefficientProfile CoefficientProfile::with_horizon(double horizon) const {
    return CoefficientProfile(dimension_, horizon, a_terms_, b_terms_, c_terms_, id_);
}

CoefficientProfile CoefficientProfile::with_lower_order(std::vector<VectorTerm> b_terms,
                                                        std::vector<ScalarTerm> c_terms,
                                                        std::string id) const {
    return CoefficientProfile(dimension_, horizon_, a_terms_, std::move(b_terms),
                              std::move(c_terms), std::move(id));
}

CoefficientProfile CoefficientProfile::without_lower_order() const {
    return CoefficientProfile(dimension_, horizon_, a_terms_, {}, {}, id_);
}

double min_eigenvalue(const Matrix& m) {
    const Matrix sym = 0.5 * (m + m.transpose());
    if (sym.rows() == 1) return sym(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

Matrix matrix_sqrt_psd(const Matrix& m) {
    if (m.rows() != m.cols()) throw Error(ErrorKind::invalid_argument, "matrix must be square");
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    Vector lambda = solver.eigenvalues();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i) < -kEigenClamp) {
            std::ostringstream msg;
            msg << "eigenvalue " << lambda(i) << " below -" << kEigenClamp;
            throw Error(ErrorKind::not_psd, msg.str());
        }
        lambda(i) = std::sqrt(std::max(lambda(i), 0.0));
    }
    const Matrix& v = solver.eigenvectors();
    return v * lambda.asDiagonal() * v.transpose();
}

}  // namespace degpar
