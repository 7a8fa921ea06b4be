#include "spectral.hpp"

#include "degpar/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace degpar::detail {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

Spectrum::Spectrum(const Grid& grid) : grid_(grid) {
    const int d = grid.dimension;
    const int n = grid.n;
    std::array<int, 3> dims{n, n, n};
    complex_size_ = static_cast<std::size_t>(n / 2 + 1);
    for (int i = 0; i + 1 < d; ++i) complex_size_ *= static_cast<std::size_t>(n);

    std::vector<double> real(grid.size());
    std::vector<Complex> spec(complex_size_);
    {
        std::lock_guard lock(planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward_plan_ = fftw_plan_dft_r2c(d, dims.data(), real.data(),
                                          reinterpret_cast<fftw_complex*>(spec.data()), flags);
        inverse_plan_ = fftw_plan_dft_c2r(d, dims.data(),
                                          reinterpret_cast<fftw_complex*>(spec.data()),
                                          real.data(), flags | FFTW_DESTROY_INPUT);
    }
    if (forward_plan_ == nullptr || inverse_plan_ == nullptr) {
        throw Error(ErrorKind::invalid_argument, "FFTW planning failed");
    }

    const double k0 = std::numbers::pi / grid.halfwidth;
    const int half = n / 2;
    wave_.resize(complex_size_);
    wave_odd_.resize(complex_size_);
    for (std::size_t flat = 0; flat < complex_size_; ++flat) {
        std::size_t code = flat;
        std::array<int, 3> index{};
        index[d - 1] = static_cast<int>(code % static_cast<std::size_t>(half + 1));
        code /= static_cast<std::size_t>(half + 1);
        for (int i = d - 2; i >= 0; --i) {
            index[i] = static_cast<int>(code % static_cast<std::size_t>(n));
            code /= static_cast<std::size_t>(n);
        }
        std::array<double, 3> xi{};
        std::array<double, 3> xi_odd{};
        for (int i = 0; i < d; ++i) {
            const int j = index[i];
            const int signed_j = j <= half ? j : j - n;
            xi[i] = k0 * signed_j;
            xi_odd[i] = j == half ? 0.0 : xi[i];
        }
        wave_[flat] = xi;
        wave_odd_[flat] = xi_odd;
    }
}

Spectrum::~Spectrum() {
    std::lock_guard lock(planner_mutex());
    if (forward_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    if (inverse_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void Spectrum::forward(std::span<const double> in, std::span<Complex> out) const {
    // r2c plans preserve their input
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
}

void Spectrum::inverse(std::span<Complex> in, std::span<double> out) const {
    fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                         reinterpret_cast<fftw_complex*>(in.data()), out.data());
    const double scale = 1.0 / static_cast<double>(grid_.size());
    for (double& v : out) v *= scale;
}

void apply_symbol(const Spectrum& spectrum, const KernelSpec& kernel, double scale,
                  std::span<const Complex> in, std::span<Complex> accumulate) {
    const int d = spectrum.grid().dimension;
    const auto& wave = spectrum.wave();
    const auto& wave_odd = spectrum.wave_odd();
    std::array<double, 9> sigma{};
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) sigma[3 * i + j] = kernel.sigma(i, j);
    }
    std::array<double, 3> shift{};
    bool shifted = false;
    for (int i = 0; i < d; ++i) {
        shift[i] = kernel.shift(i);
        shifted = shifted || shift[i] != 0.0;
    }
    const double amplitude = scale * std::exp(kernel.growth);
    for (std::size_t idx = 0; idx < in.size(); ++idx) {
        const auto& xi = wave[idx];
        double quad = 0.0;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) quad += sigma[3 * i + j] * xi[i] * xi[j];
        }
        const double decay = amplitude * std::exp(-0.5 * quad);
        if (decay == 0.0) continue;
        if (shifted) {
            const auto& xo = wave_odd[idx];
            double phase = 0.0;
            for (int i = 0; i < d; ++i) phase += xo[i] * shift[i];
            accumulate[idx] += in[idx] * std::polar(decay, phase);
        } else {
            accumulate[idx] += in[idx] * decay;
        }
    }
}

}  // namespace degpar::detail
