#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "kfe/errors.hpp"
#include "kfe/fourier.hpp"
#include "kfe/grid.hpp"
#include "kfe/jump_laws.hpp"
#include "kfe/math_util.hpp"

namespace kfe {

// ---------------------------------------------------------------------------
// Coefficients of the continuous part: drift a(t) and variance rate A(t).
// A(t) must stay strictly positive on the horizon (uniform ellipticity).
// Constant coefficients bypass the quadrature entirely.
// ---------------------------------------------------------------------------
class DiffusionCoefficients {
public:
    static DiffusionCoefficients constant(double drift, double variance_rate) {
        if (!(variance_rate > 0.0))
            throw validation_error("DiffusionCoefficients: variance rate must be positive");
        DiffusionCoefficients c;
        c.const_drift_ = drift;
        c.const_variance_ = variance_rate;
        c.constant_ = true;
        return c;
    }

    static DiffusionCoefficients time_varying(std::function<double(double)> drift,
                                              std::function<double(double)> variance_rate) {
        DiffusionCoefficients c;
        c.drift_fn_ = std::move(drift);
        c.variance_fn_ = std::move(variance_rate);
        c.constant_ = false;
        return c;
    }

    bool is_constant() const { return constant_; }

    // Integrals over [s,T] to 1e-12 relative accuracy.
    double drift_integral(double s, double T) const {
        if (constant_) return const_drift_ * (T - s);
        return integrate_checked(drift_fn_, s, T, false);
    }

    double variance_integral(double s, double T) const {
        if (constant_) return const_variance_ * (T - s);
        return integrate_checked(variance_fn_, s, T, true);
    }

private:
    static double integrate_checked(const std::function<double(double)>& f, double s, double T,
                                    bool elliptic) {
        if (elliptic) {
            // spot-check positivity on a fixed sample of the horizon
            for (int i = 0; i <= 32; ++i) {
                const double t = s + (T - s) * i / 32.0;
                const double v = f(t);
                if (!(v > 0.0) || !std::isfinite(v))
                    throw validation_error(
                        "DiffusionCoefficients: variance rate must stay positive on the horizon");
            }
        }
        const double coarse = adaptive_simpson(f, s, T, 1e-9);
        return adaptive_simpson(f, s, T, 1e-12 * std::max(1.0, std::abs(coarse)));
    }

    std::function<double(double)> drift_fn_;
    std::function<double(double)> variance_fn_;
    double const_drift_ = 0.0;
    double const_variance_ = 1.0;
    bool constant_ = true;
};

// ---------------------------------------------------------------------------
// The jump part: intensity lambda, jump-size law p(z), and the spatial jump
// transform c(z). The identity transform is the common case and evaluates
// through the law's characteristic function; general transforms integrate
// against the law directly.
// ---------------------------------------------------------------------------
class JumpSpec {
public:
    JumpSpec(double intensity, JumpLaw law)
        : intensity_(intensity), law_(std::move(law)), identity_(true) {
        if (!(intensity > 0.0)) throw validation_error("JumpSpec: intensity must be positive");
    }

    JumpSpec(double intensity, JumpLaw law, std::function<double(double)> transform)
        : intensity_(intensity),
          law_(std::move(law)),
          transform_(std::move(transform)),
          identity_(false) {
        if (!(intensity > 0.0)) throw validation_error("JumpSpec: intensity must be positive");
    }

    double intensity() const { return intensity_; }
    const JumpLaw& law() const { return law_; }
    bool identity_transform() const { return identity_; }
    double transform(double z) const { return identity_ ? z : transform_(z); }

    // E[c(Z)], the compensator mean. Must be finite.
    double transform_mean() const {
        double m;
        if (identity_) {
            m = moments(law_).mean;
        } else if (law_.is_discrete()) {
            const auto w = full_atoms();
            m = 0.0;
            for (const auto& a : w.atoms) m += a.mass * transform_(a.location);
        } else {
            const auto [lo, hi] = integration_support(law_);
            const ConvolvedLaw cl(law_, 1);
            m = adaptive_simpson(
                [&](double z) { return cl.pdf(z) * transform_(z); }, lo, hi, 1e-13);
        }
        if (!std::isfinite(m))
            throw validation_error("JumpSpec: compensator integral diverges");
        return m;
    }

    // E[e^{i theta c(Z)}]
    std::complex<double> transform_cf(double theta) const {
        if (identity_) return characteristic_function(law_, theta);
        if (law_.is_discrete()) {
            std::complex<double> s = 0.0;
            for (const auto& a : full_atoms().atoms)
                s += a.mass * std::polar(1.0, theta * transform_(a.location));
            return s;
        }
        const auto [lo, hi] = integration_support(law_);
        const ConvolvedLaw cl(law_, 1);
        return adaptive_simpson(
            [&](double z) -> std::complex<double> {
                return cl.pdf(z) * std::polar(1.0, theta * transform_(z));
            },
            lo, hi, 1e-13);
    }

private:
    const AtomWindow& full_atoms() const {
        if (atom_cache_.atoms.empty()) {
            constexpr double inf = std::numeric_limits<double>::infinity();
            atom_cache_ = ConvolvedLaw(law_, 1).atoms_in(-inf, inf, 1e-16);
        }
        return atom_cache_;
    }

    double intensity_;
    JumpLaw law_;
    std::function<double(double)> transform_;
    bool identity_;
    mutable AtomWindow atom_cache_;
};

// ---------------------------------------------------------------------------
// A solution operator in Fourier-multiplier form. The stored multiplier is the
// characteristic function of the process increment over [s,T]:
//
//   m(theta) = E[e^{i theta (X_T - X_s)}]
//
// so inverting it (evolve_density applied to a delta) yields the transition
// density of the increment, and multiplier composition is convolution of the
// corresponding solutions. m(0) = 1 expresses mass conservation, and pure-jump
// and pure-diffusion multipliers satisfy |m| <= 1.
// ---------------------------------------------------------------------------
struct Propagator {
    Propagator(Grid1D g, std::vector<std::complex<double>> m, double s_, double T_)
        : grid(std::move(g)), multiplier(std::move(m)), s(s_), T(T_) {
        if (multiplier.size() != grid.size())
            throw validation_error("Propagator: multiplier length must equal grid size");
        if (std::abs(multiplier[0] - std::complex<double>(1.0)) > 1e-10)
            throw numerical_error("Propagator: multiplier(0) must be 1 (mass conservation)");
    }

    static Propagator identity(const Grid1D& g, double s, double T) {
        return Propagator(g, std::vector<std::complex<double>>(g.size(), 1.0), s, T);
    }

    Grid1D grid;
    std::vector<std::complex<double>> multiplier;
    double s;
    double T;
};

namespace detail {

inline void check_horizon(double s, double T) {
    if (!(s <= T) || !std::isfinite(s) || !std::isfinite(T))
        throw validation_error("propagator horizon requires s <= T");
}

} // namespace detail

// Solution operator of the drift-diffusion part over [s,T]:
// m(theta) = exp{ i theta int_s^T a - theta^2/2 int_s^T A }.
// s == T is the degenerate limit and yields the identity.
inline Propagator diffusion_propagator(const DiffusionCoefficients& c, double s, double T,
                                       const Grid1D& grid) {
    detail::check_horizon(s, T);
    const double ia = c.drift_integral(s, T);
    const double iv = c.variance_integral(s, T);
    std::vector<std::complex<double>> m(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double th = grid.frequency(j);
        m[j] = std::exp(std::complex<double>(-0.5 * iv * th * th, ia * th));
    }
    return Propagator(grid, std::move(m), s, T);
}

// Solution operator of the jump part over [s,T]:
// m(theta) = exp{ (T-s) lambda int (e^{i theta c(z)} - 1 - i theta c(z) [compensated]) p(z) dz }.
inline Propagator jump_propagator(const JumpSpec& j, double s, double T, const Grid1D& grid,
                                  bool compensated = false) {
    detail::check_horizon(s, T);
    const double tau = T - s;
    const double mean_c = compensated ? j.transform_mean() : 0.0;
    std::vector<std::complex<double>> m(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double th = grid.frequency(k);
        std::complex<double> expo = j.transform_cf(th) - 1.0;
        if (compensated) expo -= std::complex<double>(0.0, th * mean_c);
        m[k] = std::exp(tau * j.intensity() * expo);
    }
    return Propagator(grid, std::move(m), s, T);
}

// Full-generator multiplier built in one exponential; the operational content
// of the splitting theorem is compose(diffusion, jump) == direct.
inline Propagator direct_propagator(const DiffusionCoefficients& c, const JumpSpec& j, double s,
                                    double T, const Grid1D& grid, bool compensated = false) {
    detail::check_horizon(s, T);
    const double ia = c.drift_integral(s, T);
    const double iv = c.variance_integral(s, T);
    const double tau = T - s;
    const double mean_c = compensated ? j.transform_mean() : 0.0;
    std::vector<std::complex<double>> m(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double th = grid.frequency(k);
        std::complex<double> expo(-0.5 * iv * th * th, ia * th);
        expo += tau * j.intensity() * (j.transform_cf(th) - 1.0);
        if (compensated) expo -= tau * j.intensity() * std::complex<double>(0.0, th * mean_c);
        m[k] = std::exp(expo);
    }
    return Propagator(grid, std::move(m), s, T);
}

// Pointwise product of multipliers == convolution of the solutions. Accepts
// operators on the same horizon (operator splitting) or on adjacent horizons
// (Chapman-Kolmogorov composition).
inline Propagator compose(const Propagator& p1, const Propagator& p2) {
    if (!(p1.grid == p2.grid))
        throw validation_error("compose: propagators must share one grid");
    double s, T;
    if (p1.s == p2.s && p1.T == p2.T) {
        s = p1.s;
        T = p1.T;
    } else if (p1.T == p2.s) {
        s = p1.s;
        T = p2.T;
    } else if (p2.T == p1.s) {
        s = p2.s;
        T = p1.T;
    } else {
        throw validation_error("compose: horizons must coincide or be adjacent");
    }
    std::vector<std::complex<double>> m(p1.multiplier.size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = p1.multiplier[k] * p2.multiplier[k];
    return Propagator(p1.grid, std::move(m), s, T);
}

// Transition density of the increment: the inverse transform of the multiplier.
inline GridFunction density(const Propagator& p, const NumericsPolicy& policy = {}) {
    return inverse_transform(p.multiplier, p.grid, policy);
}

// Forward evolution of an initial density: rho_T = rho_s * f_increment.
inline GridFunction evolve_density(const Propagator& p, const GridFunction& rho,
                                   const NumericsPolicy& policy = {}) {
    if (!(rho.grid == p.grid))
        throw validation_error("evolve_density: grid mismatch");
    detail::require_edge_decay(rho, policy, "evolve_density");
    auto F = forward_transform(rho);
    for (std::size_t j = 0; j < F.size(); ++j) F[j] *= p.multiplier[j];
    return inverse_transform(F, p.grid, policy);
}

// Solution of the terminal-value problem: u(s,x) = E[phi(x + increment)].
// In multiplier form this applies m(-theta); the index reflection below is the
// exact evaluation of the stored multiplier at the negated frequencies.
inline GridFunction solve_terminal(const Propagator& p, const GridFunction& phi,
                                   const NumericsPolicy& policy = {}) {
    if (!(phi.grid == p.grid))
        throw validation_error("solve_terminal: grid mismatch");
    detail::require_edge_decay(phi, policy, "solve_terminal");
    auto F = forward_transform(phi);
    const std::size_t n = F.size();
    for (std::size_t j = 0; j < n; ++j) F[j] *= p.multiplier[(n - j) % n];
    return inverse_transform(F, p.grid, policy);
}

} // namespace kfe
