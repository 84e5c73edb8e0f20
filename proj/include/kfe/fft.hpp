#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "kfe/errors.hpp"

namespace kfe::detail {

// In-place iterative radix-2 transform. sign=+1 computes sum_k a_k e^{+2pi i jk/N},
// sign=-1 the conjugate kernel. No normalization; length must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw validation_error("fft_radix2: length must be a power of two");

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    // one table of e^{sign 2 pi i k / n}; stage twiddles index it with a stride
    const double base = sign > 0 ? 2.0 * 3.14159265358979323846
                                 : -2.0 * 3.14159265358979323846;
    std::vector<std::complex<double>> twiddle(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k)
        twiddle[k] = std::polar(1.0, base * static_cast<double>(k) / static_cast<double>(n));

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto w = twiddle[k * stride];
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

} // namespace kfe::detail
