#include "degpar/suite.hpp"

#include "degpar/error.hpp"

namespace degpar {

namespace {

MatrixTerm matrix_term(TimeBasis basis, Matrix coefficient, TimeSupport support = {}) {
    return MatrixTerm{basis, support, std::move(coefficient)};
}

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

}  // namespace

const std::vector<std::string>& canonical_names() {
    static const std::vector<std::string> names{"identity", "anisotropic", "window", "unbounded",
                                                "rotating"};
    return names;
}

CoefficientProfile canonical_profile(const std::string& name, double horizon) {
    const Matrix eye = Matrix::Identity(2, 2);
    std::vector<MatrixTerm> a;
    if (name == "identity") {
        a.push_back(matrix_term(constant_basis(), eye));
    } else if (name == "anisotropic") {
        a.push_back(matrix_term(constant_basis(), diag2(1.0, 4.0)));
    } else if (name == "window") {
        a.push_back(matrix_term(constant_basis(), eye, {0.0, 1.0}));
        a.push_back(matrix_term(constant_basis(), eye, {2.0, kInfinity}));
    } else if (name == "unbounded") {
        a.push_back(matrix_term(constant_basis(), eye));
        a.push_back(matrix_term(power_basis(-0.5), eye));
    } else if (name == "rotating") {
        Matrix swap = Matrix::Zero(2, 2);
        swap(0, 1) = swap(1, 0) = -1.0;
        a.push_back(matrix_term(constant_basis(), 2.0 * eye));
        a.push_back(matrix_term(cosine_basis(2.0), diag2(-1.0, 1.0)));
        a.push_back(matrix_term(sine_basis(2.0), swap));
    } else {
        throw Error(ErrorKind::config, "unknown canonical profile '" + name + "'");
    }
    return CoefficientProfile(2, horizon, std::move(a), {}, {}, name);
}

CoefficientProfile with_lower_order(const CoefficientProfile& profile, LowerOrder variant) {
    if (variant == LowerOrder::none) return profile.without_lower_order();
    Vector b(profile.dimension());
    for (int i = 0; i < b.size(); ++i) b(i) = i % 2 == 0 ? 1.0 : -1.0;
    const double c = variant == LowerOrder::growth ? 1.0 : -1.0;
    std::vector<VectorTerm> bs{VectorTerm{constant_basis(), {}, b}};
    std::vector<ScalarTerm> cs{ScalarTerm{constant_basis(), {}, c}};
    const std::string suffix = variant == LowerOrder::growth ? "+drift,c=+1" : "+drift,c=-1";
    return profile.with_lower_order(std::move(bs), std::move(cs), profile.id() + suffix);
}

std::vector<CoefficientProfile> canonical_suite(double horizon, bool with_variants) {
    std::vector<CoefficientProfile> out;
    for (const auto& name : canonical_names()) {
        auto base = canonical_profile(name, horizon);
        out.push_back(base);
        if (with_variants) {
            out.push_back(with_lower_order(base, LowerOrder::growth));
            out.push_back(with_lower_order(base, LowerOrder::decay));
        }
    }
    return out;
}

Forcing bump_forcing(int dimension, double variance, TimeSupport window, double amplitude) {
    ForcingComponent component;
    component.bump.amplitude = amplitude;
    component.bump.variance = variance;
    component.time.window = window;
    return Forcing(dimension, {component});
}

}  // namespace degpar
