#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "kfe/errors.hpp"

namespace kfe {

// Uniform periodic grid: nodes x_k = x_min + k h, k = 0..n-1, h = (x_max-x_min)/n.
// x_max itself is not a node. Sizes are powers of two so the radix-2 transform
// applies directly; anything else is rejected rather than padded.
class Grid1D {
public:
    Grid1D(double x_min, double x_max, std::size_t n_points)
        : x_min_(x_min), x_max_(x_max), n_(n_points) {
        if (!(x_max > x_min))
            throw validation_error("Grid1D: x_max must exceed x_min");
        if (n_ < 8 || !std::has_single_bit(n_))
            throw validation_error("Grid1D: n_points must be a power of two >= 8");
        spacing_ = (x_max_ - x_min_) / static_cast<double>(n_);
        if (!(spacing_ > 0.0) || !std::isfinite(spacing_))
            throw validation_error("Grid1D: degenerate spacing");
    }

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    double spacing() const { return spacing_; }
    std::size_t size() const { return n_; }

    double node(std::size_t k) const { return x_min_ + spacing_ * static_cast<double>(k); }

    // Signed index of the node nearest to x; may fall outside [0, n).
    std::ptrdiff_t nearest_index(double x) const {
        return static_cast<std::ptrdiff_t>(std::llround((x - x_min_) / spacing_));
    }

    bool covers(double x) const {
        const auto k = nearest_index(x);
        return k >= 0 && k < static_cast<std::ptrdiff_t>(n_);
    }

    // Conjugate frequency theta_j = 2 pi j' / (n h) with j' the signed index
    // (j for j < n/2, j - n otherwise).
    double frequency(std::size_t j) const {
        const auto half = n_ / 2;
        const double signed_j =
            j < half ? static_cast<double>(j)
                     : static_cast<double>(j) - static_cast<double>(n_);
        return 2.0 * pi_ * signed_j / (static_cast<double>(n_) * spacing_);
    }

    double frequency_spacing() const { return 2.0 * pi_ / (static_cast<double>(n_) * spacing_); }

    friend bool operator==(const Grid1D& a, const Grid1D& b) {
        return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.n_ == b.n_;
    }

private:
    static constexpr double pi_ = 3.14159265358979323846;
    double x_min_;
    double x_max_;
    std::size_t n_;
    double spacing_;
};

// A real-valued function sampled on a Grid1D. Values are immutable by
// convention after construction; all operations return fresh objects.
struct GridFunction {
    GridFunction(Grid1D g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        if (values.size() != grid.size())
            throw validation_error("GridFunction: value count must equal grid size");
        for (double x : values)
            if (!std::isfinite(x))
                throw validation_error("GridFunction: values must be finite");
    }

    static GridFunction zero(const Grid1D& g) {
        return GridFunction(g, std::vector<double>(g.size(), 0.0));
    }

    Grid1D grid;
    std::vector<double> values;
};

// Trapezoid rule over the grid span [x_0, x_{n-1}].
inline double integrate(const GridFunction& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    s -= 0.5 * (f.values.front() + f.values.back());
    return s * f.grid.spacing();
}

inline double max_abs(const GridFunction& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

} // namespace kfe
