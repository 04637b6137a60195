#pragma once

#include <cmath>
#include <complex>
#include <fftw3.h>
#include <mutex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace rphar::spectrum {

using cplx = std::complex<double>;

namespace detail {

/// Plan creation and destruction are not thread-safe in FFTW; execution is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

/**
 * @brief Forward DFT X_k = sum_n x_n exp(-2 pi i k n / N) via FFTW.
 *
 * Computes the real-input half spectrum and fills the rest by conjugate symmetry.
 */
inline std::vector<cplx> fft(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    const std::size_t half = n / 2 + 1;
    std::vector<double> in(x.begin(), x.end());
    std::vector<cplx> out(n);
    auto* raw = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan;
    {
        std::lock_guard lock(detail::planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), raw, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(detail::planner_mutex());
        fftw_destroy_plan(plan);
    }
    for (std::size_t k = half; k < n; ++k) out[k] = std::conj(out[n - k]);
    return out;
}

/// Forward DFT by direct summation, O(N^2). Twiddle index k*n is reduced mod N.
inline std::vector<cplx> dft(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    std::vector<cplx> tw(n);
    for (std::size_t j = 0; j < n; ++j)
        tw[j] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += x[j] * tw[(k * j) % n];
        out[k] = acc;
    }
    return out;
}

}  // namespace rphar::spectrum
