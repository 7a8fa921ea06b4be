#pragma once

// FFTW r2c / c2r transforms on a periodic grid. Plans are created once per
// Spectrum (under a global lock, the FFTW planner is not reentrant) and may
// then be executed concurrently on caller-owned buffers.

#include "degpar/field.hpp"

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace degpar::detail {

using Complex = std::complex<double>;

class Spectrum {
public:
    explicit Spectrum(const Grid& grid);
    ~Spectrum();
    Spectrum(const Spectrum&) = delete;
    Spectrum& operator=(const Spectrum&) = delete;

    const Grid& grid() const noexcept { return grid_; }
    std::size_t complex_size() const noexcept { return complex_size_; }

    void forward(std::span<const double> in, std::span<Complex> out) const;
    /// Normalized inverse; `in` is overwritten.
    void inverse(std::span<Complex> in, std::span<double> out) const;

    /// Wave vector of each stored coefficient (Nyquist entries carry +pi n / 2L).
    const std::vector<std::array<double, 3>>& wave() const noexcept { return wave_; }
    /// Same with Nyquist components set to zero; used for odd-order symbols
    /// (first derivatives, translation phases) so real signals stay real.
    const std::vector<std::array<double, 3>>& wave_odd() const noexcept { return wave_odd_; }

private:
    Grid grid_;
    std::size_t complex_size_ = 0;
    void* forward_plan_ = nullptr;
    void* inverse_plan_ = nullptr;
    std::vector<std::array<double, 3>> wave_;
    std::vector<std::array<double, 3>> wave_odd_;
};

/// Multiplies `coeffs` by e^{growth} exp(-sigma(xi, xi) / 2) exp(i xi . shift).
void apply_symbol(const Spectrum& spectrum, const KernelSpec& kernel, double scale,
                  std::span<const Complex> in, std::span<Complex> accumulate);

}  // namespace degpar::detail
