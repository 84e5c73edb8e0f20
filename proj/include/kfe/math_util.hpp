#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <type_traits>
#include <utility>
#include <vector>

#include "kfe/errors.hpp"

namespace kfe {

inline constexpr double pi = std::numbers::pi;

inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * pi);
}

inline double norm_pdf(double x, double mean, double stddev) {
    const double z = (x - mean) / stddev;
    return std::exp(-0.5 * z * z) / (stddev * std::sqrt(2.0 * pi));
}

inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Quantile of the standard normal. Abramowitz-Stegun 26.2.23 seed followed by
// two Halley refinements; absolute error below 1e-15 over (0,1).
inline double inv_norm_cdf(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw validation_error("inv_norm_cdf: argument must lie in (0,1)");
    const bool lower = u < 0.5;
    const double p = lower ? u : 1.0 - u;
    const double t = std::sqrt(-2.0 * std::log(p));
    double x = t - (2.515517 + t * (0.802853 + t * 0.010328)) /
                       (1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308)));
    double z = lower ? -x : x;
    for (int i = 0; i < 2; ++i) {
        const double f = norm_cdf(z) - u;
        const double d = norm_pdf(z);
        z -= 2.0 * f / (2.0 * d + z * f);
    }
    return z;
}

// e^{-x} x^n / n!, computed in log space so large n and x are safe.
inline double poisson_weight(double x, int n) {
    if (x == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(-x + n * std::log(x) - std::lgamma(n + 1.0));
}

namespace detail {

template <class F, class R>
R adaptive_simpson_rec(F& f, double a, double b, R fa, R fm, R fb, R whole,
                       double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const R flm = f(lm);
    const R frm = f(rm);
    const R left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const R right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const R delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Simpson quadrature over [a,b]. Works for real- and complex-valued
// integrands; tol is absolute.
template <class F, class R = std::invoke_result_t<F&, double>>
R adaptive_simpson(F f, double a, double b, double tol = 1e-12, int max_depth = 48) {
    if (a == b) return R{};
    const R fa = f(a);
    const R fb = f(b);
    const R fm = f(0.5 * (a + b));
    const R whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Filon-Simpson quadrature of int_a^b e^{i theta w} g(w) dw for smooth g.
// g is sampled once on a fixed panel grid; each theta then costs O(panels),
// with accuracy independent of the oscillation rate.
class OscillatoryKernel {
public:
    template <class G>
    OscillatoryKernel(G&& g, double a, double b, std::size_t panels = 512)
        : a_(a), h_(0.5 * (b - a) / static_cast<double>(panels)), values_(2 * panels + 1) {
        for (std::size_t i = 0; i < values_.size(); ++i)
            values_[i] = g(a_ + h_ * static_cast<double>(i));
    }

    std::complex<double> integral(double theta) const {
        const double alpha = theta * h_;
        double m0r, m1i, m2r;  // moments of 1, xi, xi^2 against e^{i alpha xi} on [-1,1]
        if (std::abs(alpha) < 0.08) {
            const double a2 = alpha * alpha;
            m0r = 2.0 * (1.0 - a2 / 6.0 + a2 * a2 / 120.0);
            m1i = 2.0 * alpha * (1.0 / 3.0 - a2 / 30.0 + a2 * a2 / 840.0);
            m2r = 2.0 * (1.0 / 3.0 - a2 / 10.0 + a2 * a2 / 168.0);
        } else {
            const double s = std::sin(alpha), c = std::cos(alpha);
            m0r = 2.0 * s / alpha;
            m1i = 2.0 * (s / (alpha * alpha) - c / alpha);
            m2r = 2.0 * (s / alpha + 2.0 * c / (alpha * alpha) -
                         2.0 * s / (alpha * alpha * alpha));
        }
        std::complex<double> total = 0.0;
        const std::size_t panels = (values_.size() - 1) / 2;
        for (std::size_t p = 0; p < panels; ++p) {
            const double ga = values_[2 * p], gm = values_[2 * p + 1], gb = values_[2 * p + 2];
            const double c0 = gm, c1 = 0.5 * (gb - ga), c2 = 0.5 * (ga + gb) - gm;
            const std::complex<double> inner(c0 * m0r + c2 * m2r, c1 * m1i);
            const double mid = a_ + h_ * static_cast<double>(2 * p + 1);
            total += std::polar(h_, theta * mid) * inner;
        }
        return total;
    }

private:
    double a_;
    double h_;  // half panel width
    std::vector<double> values_;
};

// Compensated accumulator; keeps sums schedule-independent at emitted precision
// when blocks are combined in a fixed order.
class KahanSum {
public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

} // namespace kfe
