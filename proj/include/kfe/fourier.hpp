#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "kfe/errors.hpp"
#include "kfe/fft.hpp"
#include "kfe/grid.hpp"

namespace kfe {

// Knobs for the consistency checks threaded through the spectral operations.
// Strict mode turns wrap-around warnings into errors; relaxed mode lets
// exploratory runs proceed.
struct NumericsPolicy {
    bool strict = true;
    double edge_tol = 1e-12;  // relative edge decay required before convolving
    double imag_tol = 1e-8;   // max imaginary residual relative to max magnitude
};

// Discrete realization of phi_hat(theta) = int e^{i theta x} phi(x) dx on the
// conjugate grid theta_j. The spacing and e^{i theta x_min} factors keep the
// continuous convention, so smooth decaying samples reproduce their analytic
// transform to aliasing accuracy.
inline std::vector<std::complex<double>> forward_transform(const GridFunction& f) {
    const auto& g = f.grid;
    const std::size_t n = g.size();
    std::vector<std::complex<double>> a(n);
    for (std::size_t k = 0; k < n; ++k) a[k] = f.values[k];
    detail::fft_radix2(a, +1);
    for (std::size_t j = 0; j < n; ++j)
        a[j] *= g.spacing() * std::polar(1.0, g.frequency(j) * g.x_min());
    return a;
}

// Inverse of forward_transform: (2 pi)^{-1} int e^{-i theta x} F(theta) dtheta
// discretized on the same grid. Imaginary residuals below imag_tol (relative to
// the max magnitude) are discarded; larger ones signal an inconsistent
// multiplier and raise a numerical_error.
inline GridFunction inverse_transform(std::span<const std::complex<double>> spectrum,
                                      const Grid1D& grid,
                                      const NumericsPolicy& policy = {}) {
    const std::size_t n = grid.size();
    if (spectrum.size() != n)
        throw validation_error("inverse_transform: spectrum length must equal grid size");
    std::vector<std::complex<double>> a(n);
    for (std::size_t j = 0; j < n; ++j)
        a[j] = spectrum[j] * std::polar(1.0, -grid.frequency(j) * grid.x_min());
    detail::fft_radix2(a, -1);

    const double scale = 1.0 / (static_cast<double>(n) * grid.spacing());
    double max_mag = 0.0, max_imag = 0.0;
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto z = a[k] * scale;
        out[k] = z.real();
        max_mag = std::max(max_mag, std::abs(z));
        max_imag = std::max(max_imag, std::abs(z.imag()));
    }
    if (max_mag > 0.0 && max_imag > policy.imag_tol * max_mag)
        throw numerical_error("inverse_transform: imaginary residual " +
                              std::to_string(max_imag / max_mag) +
                              " exceeds tolerance; multiplier is inconsistent");
    return GridFunction(grid, std::move(out));
}

namespace detail {

inline void require_edge_decay(const GridFunction& f, const NumericsPolicy& policy,
                               const char* who) {
    if (!policy.strict) return;
    const double m = max_abs(f);
    if (m == 0.0) return;
    const double edge = std::max(std::abs(f.values.front()), std::abs(f.values.back()));
    if (edge > policy.edge_tol * m)
        throw numerical_error(std::string(who) +
                              ": values do not decay at the grid edges; circular "
                              "wrap-around would contaminate the result (use a wider "
                              "grid or relaxed mode)");
}

} // namespace detail

// Circular convolution via transforms, scaled by the spacing so it approximates
// (f*g)(x) = int f(x-y) g(y) dy. Assumes x=0 lies on the grid (symmetric grids
// do). Both inputs must decay at the edges; strict mode enforces it.
inline GridFunction convolve(const GridFunction& f, const GridFunction& g,
                             const NumericsPolicy& policy = {}) {
    if (!(f.grid == g.grid))
        throw validation_error("convolve: operands must share one grid");
    detail::require_edge_decay(f, policy, "convolve");
    detail::require_edge_decay(g, policy, "convolve");
    auto F = forward_transform(f);
    const auto G = forward_transform(g);
    for (std::size_t j = 0; j < F.size(); ++j) F[j] *= G[j];
    return inverse_transform(F, f.grid, policy);
}

} // namespace kfe
