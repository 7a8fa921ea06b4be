#include "degpar/field.hpp"

#include "degpar/error.hpp"
#include "spectral.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>

namespace degpar {

using detail::Complex;
using detail::Spectrum;

Grid::Grid(int dimension_, int n_, double halfwidth_)
    : dimension(dimension_), n(n_), halfwidth(halfwidth_) {
    if (dimension < 1 || dimension > 3) {
        throw Error(ErrorKind::invalid_argument, "grid dimension must be 1, 2 or 3");
    }
    if (n < 2 || !std::has_single_bit(static_cast<unsigned>(n))) {
        throw Error(ErrorKind::invalid_argument, "points per axis must be a power of two");
    }
    if (!(halfwidth > 0.0) || !std::isfinite(halfwidth)) {
        throw Error(ErrorKind::invalid_argument, "box halfwidth must be positive");
    }
}

double Grid::cell_volume() const noexcept { return std::pow(spacing(), dimension); }

std::size_t Grid::size() const noexcept {
    std::size_t s = 1;
    for (int i = 0; i < dimension; ++i) s *= static_cast<std::size_t>(n);
    return s;
}

SpacePoint Grid::point(std::size_t flat) const noexcept {
    SpacePoint x{};
    for (int i = dimension - 1; i >= 0; --i) {
        x[i] = coordinate(static_cast<int>(flat % static_cast<std::size_t>(n)));
        flat /= static_cast<std::size_t>(n);
    }
    return x;
}

std::vector<double> TimeGrid::nodes() const {
    std::vector<double> t(static_cast<std::size_t>(cells) + 1);
    for (int m = 0; m <= cells; ++m) t[m] = horizon * m / cells;
    return t;
}

std::vector<double> TimeGrid::midpoints() const {
    std::vector<double> s(static_cast<std::size_t>(cells));
    for (int k = 0; k < cells; ++k) s[k] = horizon * (k + 0.5) / cells;
    return s;
}

SpaceTimeField::SpaceTimeField(Grid grid, std::vector<double> times)
    : grid_(grid), times_(std::move(times)), values_(times_.size() * grid_.size(), 0.0) {}

SpaceTimeField::SpaceTimeField(Grid grid, std::vector<double> times, std::vector<double> values)
    : grid_(grid), times_(std::move(times)), values_(std::move(values)) {
    if (values_.size() != times_.size() * grid_.size()) {
        throw Error(ErrorKind::invalid_argument, "field payload does not match grid x times");
    }
}

std::span<double> SpaceTimeField::slice(std::size_t k) {
    return {values_.data() + k * slice_size(), slice_size()};
}

std::span<const double> SpaceTimeField::slice(std::size_t k) const {
    return {values_.data() + k * slice_size(), slice_size()};
}

std::size_t SpaceTimeField::find_time(double t) const noexcept {
    const double scale = times_.empty() ? 1.0 : std::max(1.0, std::abs(times_.back()));
    auto it = std::lower_bound(times_.begin(), times_.end(), t - 1e-12 * scale);
    if (it != times_.end() && std::abs(*it - t) <= 1e-12 * scale) {
        return static_cast<std::size_t>(it - times_.begin());
    }
    return npos;
}

double SpaceTimeField::interpolate(std::size_t k, std::span<const double> x) const {
    const int d = grid_.dimension;
    const int n = grid_.n;
    const double h = grid_.spacing();
    std::array<int, 3> lo{};
    std::array<double, 3> frac{};
    for (int i = 0; i < d; ++i) {
        const double pos = (x[i] + grid_.halfwidth) / h;
        const double fl = std::floor(pos);
        frac[i] = pos - fl;
        lo[i] = static_cast<int>(((static_cast<long long>(fl) % n) + n) % n);
    }
    const auto data = slice(k);
    double total = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double weight = 1.0;
        std::size_t flat = 0;
        for (int i = 0; i < d; ++i) {
            const int bit = (corner >> i) & 1;
            weight *= bit ? frac[i] : 1.0 - frac[i];
            flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>((lo[i] + bit) % n);
        }
        if (weight != 0.0) total += weight * data[flat];
    }
    return total;
}

bool SpaceTimeField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

KernelSpec KernelSpec::between(const CoefficientProfile& profile, double s, double t) {
    return {profile.integral_matrix(s, t), profile.integral_vector(s, t),
            profile.integral_scalar(s, t)};
}

KernelSpec KernelSpec::identity(int dimension) {
    return {Matrix::Zero(dimension, dimension), Vector::Zero(dimension), 0.0};
}

SpaceTimeField sample(const Forcing& forcing, const Grid& grid, std::span<const double> times) {
    if (!forcing.is_zero() && forcing.dimension() != grid.dimension) {
        throw Error(ErrorKind::invalid_argument, "forcing and grid dimensions differ");
    }
    SpaceTimeField out(grid, std::vector<double>(times.begin(), times.end()));
    if (forcing.is_zero()) return out;
    const std::size_t points = grid.size();
    const auto n_times = static_cast<long long>(times.size() * points);
    auto& values = out.values();
#pragma omp parallel for schedule(static)
    for (long long flat = 0; flat < n_times; ++flat) {
        const auto k = static_cast<std::size_t>(flat) / points;
        const SpacePoint x = grid.point(static_cast<std::size_t>(flat) % points);
        values[static_cast<std::size_t>(flat)] =
            forcing(times[k], std::span<const double>(x.data(), grid.dimension));
    }
    return out;
}

std::vector<double> apply_kernel(const Grid& grid, std::span<const double> g, const KernelSpec& k) {
    if (g.size() != grid.size()) throw Error(ErrorKind::invalid_argument, "slice size mismatch");
    Spectrum spectrum(grid);
    std::vector<Complex> in(spectrum.complex_size());
    std::vector<Complex> acc(spectrum.complex_size(), Complex(0.0, 0.0));
    spectrum.forward(g, in);
    detail::apply_symbol(spectrum, k, 1.0, in, acc);
    std::vector<double> out(grid.size());
    spectrum.inverse(acc, out);
    return out;
}

TimeGrid midpoint_time_grid(const SpaceTimeField& f) {
    const auto& s = f.times();
    if (s.empty()) throw Error(ErrorKind::invalid_argument, "forcing has no time slices");
    const int cells = static_cast<int>(s.size());
    const double step = 2.0 * s.front();
    const TimeGrid grid{step * cells, cells};
    const auto expected = grid.midpoints();
    for (int k = 0; k < cells; ++k) {
        if (std::abs(expected[k] - s[k]) > 1e-10 * grid.horizon) {
            throw Error(ErrorKind::invalid_argument,
                        "forcing times must be the midpoints of a uniform grid on [0, T]");
        }
    }
    return grid;
}

SpaceTimeField solve_exact(const SpaceTimeField& f, const CoefficientProfile& profile) {
    if (f.grid().dimension != profile.dimension()) {
        throw Error(ErrorKind::invalid_argument, "field and profile dimensions differ");
    }
    const TimeGrid tg = midpoint_time_grid(f);
    const auto nodes = tg.nodes();
    const auto mids = tg.midpoints();
    const double weight = tg.step();
    const int cells = tg.cells;
    const Grid& grid = f.grid();
    Spectrum spectrum(grid);
    const std::size_t nc = spectrum.complex_size();

    std::vector<Complex> fhat(nc * static_cast<std::size_t>(cells));
#pragma omp parallel for schedule(static)
    for (int k = 0; k < cells; ++k) {
        spectrum.forward(f.slice(static_cast<std::size_t>(k)),
                         std::span<Complex>(fhat.data() + static_cast<std::size_t>(k) * nc, nc));
    }

    SpaceTimeField u(grid, nodes);
#pragma omp parallel
    {
        std::vector<Complex> acc(nc);
#pragma omp for schedule(dynamic)
        for (int m = 1; m <= cells; ++m) {
            std::fill(acc.begin(), acc.end(), Complex(0.0, 0.0));
            for (int k = 0; k < m; ++k) {
                const KernelSpec kernel = KernelSpec::between(profile, mids[k], nodes[m]);
                detail::apply_symbol(
                    spectrum, kernel, weight,
                    std::span<const Complex>(fhat.data() + static_cast<std::size_t>(k) * nc, nc),
                    acc);
            }
            spectrum.inverse(acc, u.slice(static_cast<std::size_t>(m)));
        }
    }
    return u;
}

namespace {

SpaceTimeField spectral_map(const SpaceTimeField& u,
                            const std::function<void(const Spectrum&, std::size_t,
                                                     std::span<const Complex>,
                                                     std::span<Complex>)>& op) {
    const Grid& grid = u.grid();
    Spectrum spectrum(grid);
    const std::size_t nc = spectrum.complex_size();
    SpaceTimeField out(grid, u.times());
    const auto n_times = static_cast<long long>(u.n_times());
#pragma omp parallel
    {
        std::vector<Complex> in(nc);
        std::vector<Complex> acc(nc);
#pragma omp for schedule(static)
        for (long long k = 0; k < n_times; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            spectrum.forward(u.slice(kk), in);
            std::fill(acc.begin(), acc.end(), Complex(0.0, 0.0));
            op(spectrum, kk, in, acc);
            spectrum.inverse(acc, out.slice(kk));
        }
    }
    return out;
}

SpaceTimeField shift_and_scale(const SpaceTimeField& u, const CoefficientProfile& profile,
                               double sign) {
    if (u.grid().dimension != profile.dimension()) {
        throw Error(ErrorKind::invalid_argument, "field and profile dimensions differ");
    }
    std::vector<KernelSpec> kernels;
    kernels.reserve(u.n_times());
    for (double t : u.times()) {
        KernelSpec k = KernelSpec::identity(profile.dimension());
        k.shift = sign * profile.integral_vector(0.0, t);
        k.growth = sign * profile.integral_scalar(0.0, t);
        kernels.push_back(std::move(k));
    }
    return spectral_map(u, [&](const Spectrum& s, std::size_t k, std::span<const Complex> in,
                               std::span<Complex> acc) {
        detail::apply_symbol(s, kernels[k], 1.0, in, acc);
    });
}

}  // namespace

std::vector<SpaceTimeField> hessian(const SpaceTimeField& u) {
    const int d = u.grid().dimension;
    std::vector<SpaceTimeField> out(static_cast<std::size_t>(d * d));
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            out[static_cast<std::size_t>(i * d + j)] =
                spectral_map(u, [i, j](const Spectrum& s, std::size_t, std::span<const Complex> in,
                                       std::span<Complex> acc) {
                    const auto& wave = i == j ? s.wave() : s.wave_odd();
                    for (std::size_t idx = 0; idx < in.size(); ++idx) {
                        acc[idx] = -wave[idx][i] * wave[idx][j] * in[idx];
                    }
                });
            if (i != j) out[static_cast<std::size_t>(j * d + i)] = out[static_cast<std::size_t>(i * d + j)];
        }
    }
    return out;
}

SpaceTimeField hessian_frobenius(const SpaceTimeField& u) {
    const auto h = hessian(u);
    SpaceTimeField out(u.grid(), u.times());
    auto& values = out.values();
    for (const auto& component : h) {
        const auto& c = component.values();
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += c[i] * c[i];
    }
    for (double& v : values) v = std::sqrt(v);
    return out;
}

double lp_norm(const Grid& grid, std::span<const double> slice, double p) {
    if (!(p >= 1.0)) throw Error(ErrorKind::invalid_argument, "p must be in [1, inf]");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : slice) m = std::max(m, std::abs(v));
        return m;
    }
    double total = 0.0;
    if (p == 1.0) {
        for (double v : slice) total += std::abs(v);
        return total * grid.cell_volume();
    }
    if (p == 2.0) {
        for (double v : slice) total += v * v;
        return std::sqrt(total * grid.cell_volume());
    }
    for (double v : slice) total += std::pow(std::abs(v), p);
    return std::pow(total * grid.cell_volume(), 1.0 / p);
}

std::vector<double> lp_norms(const SpaceTimeField& field, double p) {
    std::vector<double> out(field.n_times());
    for (std::size_t k = 0; k < field.n_times(); ++k) out[k] = lp_norm(field.grid(), field.slice(k), p);
    return out;
}

SpaceTimeField transform_reduce(const SpaceTimeField& u, const CoefficientProfile& profile) {
    return shift_and_scale(u, profile, -1.0);
}

SpaceTimeField transform_restore(const SpaceTimeField& v, const CoefficientProfile& profile) {
    return shift_and_scale(v, profile, 1.0);
}

double recommended_halfwidth(const CoefficientProfile& profile, double forcing_radius) {
    const double T = profile.horizon();
    const Matrix sigma = profile.integral_matrix(0.0, T);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sigma, Eigen::EigenvaluesOnly);
    const double top = std::max(solver.eigenvalues().maxCoeff(), 0.0);
    // the drift can be non-monotone in time; bound it by the integral of |b|
    double shift = 0.0;
    for (const auto& term : profile.b_terms()) {
        const double magnitude = term.coefficient.norm();
        const double lo = std::min(term.support.begin, T);
        const double hi = std::min(term.support.end, T);
        if (hi > lo) {
            if (term.basis.nonnegative()) {
                shift += magnitude * std::abs(term.basis.integral(term.support, 0.0, T));
            } else {
                shift += magnitude * (hi - lo);
            }
        }
    }
    return shift + 8.0 * std::sqrt(top) + forcing_radius;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary field and ensemble formats are written in host order");

template <typename T>
void put(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw Error(ErrorKind::io, "truncated binary header");
    return value;
}

}  // namespace

void write_field(const SpaceTimeField& field, const std::string& binary_path,
                 const std::string& sidecar_path) {
    std::ofstream out(binary_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot open " + binary_path);
    const Grid& g = field.grid();
    put<std::uint64_t>(out, static_cast<std::uint64_t>(g.dimension));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(g.n));
    put<double>(out, g.halfwidth);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(field.n_times()));
    out.write(reinterpret_cast<const char*>(field.values().data()),
              static_cast<std::streamsize>(field.values().size() * sizeof(double)));
    if (!out) throw Error(ErrorKind::io, "write failed for " + binary_path);

    nlohmann::json sidecar;
    sidecar["dimension"] = g.dimension;
    sidecar["n"] = g.n;
    sidecar["halfwidth"] = g.halfwidth;
    sidecar["spacing"] = g.spacing();
    sidecar["times"] = field.times();
    sidecar["layout"] = "time-major; each slice row-major over axes; x_j = -L + j * 2L / n";
    sidecar["encoding"] = "header u64 d, u64 n, f64 L, u64 time_count; payload f64 little-endian";
    std::ofstream side(sidecar_path);
    if (!side) throw Error(ErrorKind::io, "cannot open " + sidecar_path);
    side << sidecar.dump(2) << '\n';
}

SpaceTimeField read_field(const std::string& binary_path, const std::string& sidecar_path) {
    std::ifstream in(binary_path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + binary_path);
    const auto d = get<std::uint64_t>(in);
    const auto n = get<std::uint64_t>(in);
    const auto halfwidth = get<double>(in);
    const auto count = get<std::uint64_t>(in);
    const Grid grid(static_cast<int>(d), static_cast<int>(n), halfwidth);

    std::ifstream side(sidecar_path);
    if (!side) throw Error(ErrorKind::io, "cannot open " + sidecar_path);
    nlohmann::json sidecar;
    try {
        side >> sidecar;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::io, std::string("bad sidecar: ") + e.what());
    }
    auto times = sidecar.at("times").get<std::vector<double>>();
    if (times.size() != count || sidecar.value("n", 0) != static_cast<int>(n) ||
        sidecar.value("dimension", 0) != static_cast<int>(d)) {
        throw Error(ErrorKind::io, "sidecar does not match binary header");
    }
    std::vector<double> values(count * grid.size());
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw Error(ErrorKind::io, "truncated field payload");
    return SpaceTimeField(grid, std::move(times), std::move(values));
}

}  // namespace degpar
