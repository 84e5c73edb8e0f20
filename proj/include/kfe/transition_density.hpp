#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <utility>
#include <vector>

#include "kfe/errors.hpp"
#include "kfe/fourier.hpp"
#include "kfe/grid.hpp"
#include "kfe/jump_laws.hpp"
#include "kfe/math_util.hpp"
#include "kfe/model.hpp"

namespace kfe {

// Truncation control for the Poisson-weighted series. The order N is chosen so
// the weight tail beyond N stays below tail_tolerance.
struct SeriesTruncation {
    double tail_tolerance = 1e-12;
    int max_terms = 200;
};

// Smallest N with sum_{n>N} e^{-x} x^n/n! < tol.
inline int truncation_order(double poisson_mean, const SeriesTruncation& trunc) {
    if (poisson_mean <= 0.0) return 0;
    double pmf = std::exp(-poisson_mean);
    double cum = pmf;
    for (int n = 0; n < trunc.max_terms; ++n) {
        if (1.0 - cum < trunc.tail_tolerance) return n;
        pmf *= poisson_mean / static_cast<double>(n + 1);
        cum += pmf;
    }
    throw numerical_error("series truncation cannot meet the tail tolerance within max_terms");
}

// A transition density split into a sampled smooth part and exact side-band
// atoms, so normalization and quadrature stay exact where the law is atomic.
struct Density {
    GridFunction smooth;
    std::vector<LawAtom> atoms;  // exact (location, mass); all inside the grid
    int terms_used = 0;
    double tail_mass = 0.0;      // truncated series weight
    double off_grid_mass = 0.0;  // mass lying beyond the grid span

    // Atoms deposited as mass/spacing spikes at their nearest node, giving a
    // plain GridFunction comparable to a spectral-route inversion.
    GridFunction on_grid() const {
        GridFunction out = smooth;
        for (const auto& a : atoms) {
            auto k = out.grid.nearest_index(a.location);
            k = std::clamp<std::ptrdiff_t>(k, 0,
                                           static_cast<std::ptrdiff_t>(out.grid.size()) - 1);
            out.values[static_cast<std::size_t>(k)] += a.mass / out.grid.spacing();
        }
        return out;
    }

    // Trapezoid mass of the smooth part plus exact atom masses.
    double total_mass() const {
        double m = integrate(smooth);
        for (const auto& a : atoms) m += a.mass;
        return m;
    }
};

namespace detail {

struct WeightedAtomAccumulator {
    // fixed-point keying merges coincident locations (1e-9 resolution)
    std::map<std::int64_t, double> acc;
    static constexpr double scale = 1e9;

    void add(double location, double mass) { acc[std::llround(location * scale)] += mass; }

    std::vector<LawAtom> sorted() const {
        std::vector<LawAtom> out;
        out.reserve(acc.size());
        for (const auto& [k, m] : acc)
            out.push_back({static_cast<double>(k) / scale, m});
        return out;
    }
};

} // namespace detail

// ---------------------------------------------------------------------------
// Compound Poisson transition density as a function of y - x:
//   sum_{n=0}^{N} e^{-lambda tau} (lambda tau)^n / n! * P^{*n},
// with the n=0 Dirac term carried as an exact atom.
// ---------------------------------------------------------------------------
inline Density compound_poisson_density(double intensity, const JumpLaw& law, double s, double t,
                                        const Grid1D& grid, const SeriesTruncation& trunc = {}) {
    if (!(t > s)) throw validation_error("compound_poisson_density: requires t > s");
    if (!(intensity > 0.0))
        throw validation_error("compound_poisson_density: intensity must be positive");
    const double lt = intensity * (t - s);
    const int order = truncation_order(lt, trunc);

    Density out{GridFunction::zero(grid)};
    out.terms_used = order + 1;
    {
        double cum = 0.0;
        for (int n = 0; n <= order; ++n) cum += poisson_weight(lt, n);
        out.tail_mass = std::max(0.0, 1.0 - cum);
    }

    const double half = 0.5 * grid.spacing();
    const double lo = grid.x_min() - half;
    const double hi = grid.node(grid.size() - 1) + half;

    if (law.is_discrete()) {
        detail::WeightedAtomAccumulator acc;
        for (int n = 0; n <= order; ++n) {
            const double w = poisson_weight(lt, n);
            const auto window = ConvolvedLaw(law, n).atoms_in(lo, hi, 1e-18);
            for (const auto& a : window.atoms) acc.add(a.location, w * a.mass);
            out.off_grid_mass += w * window.outside_mass;
        }
        out.atoms = acc.sorted();
        return out;
    }

    // continuous law: n=0 atom plus pointwise-sampled convolution powers
    out.atoms.push_back({0.0, poisson_weight(lt, 0)});
    for (int n = 1; n <= order; ++n) {
        const double w = poisson_weight(lt, n);
        const ConvolvedLaw cl(law, n);
        for (std::size_t k = 0; k < grid.size(); ++k)
            out.smooth.values[k] += w * cl.pdf(grid.node(k));
        out.off_grid_mass += w * (cl.cdf(lo) + (1.0 - cl.cdf(hi)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// The same density through the jump multiplier exp{lambda tau (cf - 1)} and the
// inverse transform. peel_orders low-order terms are removed from the
// multiplier analytically and added back pointwise: this eliminates the ringing
// a band-limited inversion produces at the finite-order discontinuities the
// Erlang family has at the origin. Lattice and Gaussian laws need no peeling.
// ---------------------------------------------------------------------------
inline GridFunction spectral_cp_density(double intensity, const JumpLaw& law, double s, double t,
                                        const Grid1D& grid, int peel_orders = -1,
                                        const NumericsPolicy& policy = {}) {
    if (!(t > s)) throw validation_error("spectral_cp_density: requires t > s");
    const double lt = intensity * (t - s);
    if (peel_orders < 0) peel_orders = law.get_if<ExponentialJump>() ? 3 : 0;

    std::vector<std::complex<double>> m(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto phi = characteristic_function(law, grid.frequency(j));
        std::complex<double> rem = std::exp(lt * (phi - 1.0));
        std::complex<double> term = std::exp(-lt);  // n = 0
        for (int n = 0; n <= peel_orders; ++n) {
            rem -= term;
            term *= lt * phi / static_cast<double>(n + 1);
        }
        m[j] = rem;
    }
    NumericsPolicy loose = policy;
    loose.imag_tol = 1.0;  // the remainder alone need not be Hermitian-clean
    GridFunction out = inverse_transform(m, grid, loose);
    for (int n = 0; n <= peel_orders; ++n) {
        const double w = poisson_weight(lt, n);
        const auto part = sample_density(ConvolvedLaw(law, n), grid, 1e-3);
        for (std::size_t k = 0; k < grid.size(); ++k) out.values[k] += w * part.values[k];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Jump diffusion: gamma t + sigma W_t + compound Poisson jumps. The density of
// the position at t given x0 at s is the Poisson-weighted Gaussian mixture
// N(x0 + gamma tau + ., sigma^2 tau) * P^{*n}.
// ---------------------------------------------------------------------------
struct JumpDiffusionParams {
    double gamma = 0.0;
    double sigma = 1.0;
    double intensity = 0.0;
    JumpLaw law = JumpLaw::unit(0.0);
};

namespace detail {

// Gaussian mixture over an exact atom set.
inline void add_gaussian_mixture(GridFunction& f, const std::vector<LawAtom>& atoms,
                                 double center, double sd, double& off_grid) {
    const auto& g = f.grid;
    const double lo = g.x_min(), hi = g.node(g.size() - 1);
    for (const auto& a : atoms) {
        const double mu = center + a.location;
        for (std::size_t k = 0; k < g.size(); ++k)
            f.values[k] += a.mass * norm_pdf(g.node(k), mu, sd);
        off_grid += a.mass * (norm_cdf((lo - mu) / sd) + norm_cdf((mu - hi) / sd));
    }
}

} // namespace detail

inline Density jump_diffusion_density_total(double total_drift, double total_variance,
                                            double lambda_tau, const JumpLaw& law,
                                            const Grid1D& grid,
                                            const SeriesTruncation& trunc = {},
                                            double x0 = 0.0) {
    if (!(total_variance > 0.0))
        throw validation_error("jump_diffusion_density: variance must be positive");
    const double sd = std::sqrt(total_variance);
    const double center = x0 + total_drift;
    Density out{GridFunction::zero(grid)};

    if (lambda_tau <= 0.0) {
        out.terms_used = 1;
        detail::add_gaussian_mixture(out.smooth, {{0.0, 1.0}}, center, sd, out.off_grid_mass);
        return out;
    }

    const int order = truncation_order(lambda_tau, trunc);
    out.terms_used = order + 1;
    {
        double cum = 0.0;
        for (int n = 0; n <= order; ++n) cum += poisson_weight(lambda_tau, n);
        out.tail_mass = std::max(0.0, 1.0 - cum);
    }

    if (law.is_discrete()) {
        // collapse all orders into one atom set, then one Gaussian per atom
        detail::WeightedAtomAccumulator acc;
        const double pad = 12.0 * sd;
        for (int n = 0; n <= order; ++n) {
            const double w = poisson_weight(lambda_tau, n);
            const auto window = ConvolvedLaw(law, n).atoms_in(
                grid.x_min() - center - pad, grid.node(grid.size() - 1) - center + pad, 1e-18);
            for (const auto& a : window.atoms) acc.add(a.location, w * a.mass);
            out.off_grid_mass += w * window.outside_mass;
        }
        detail::add_gaussian_mixture(out.smooth, acc.sorted(), center, sd, out.off_grid_mass);
        return out;
    }

    if (const auto* nj = law.get_if<NormalJump>()) {
        // closed form: variances add per order
        const double lo = grid.x_min(), hi = grid.node(grid.size() - 1);
        for (int n = 0; n <= order; ++n) {
            const double w = poisson_weight(lambda_tau, n);
            const double mu = center + n * nj->mean;
            const double s_n = std::sqrt(total_variance + n * nj->stddev * nj->stddev);
            for (std::size_t k = 0; k < grid.size(); ++k)
                out.smooth.values[k] += w * norm_pdf(grid.node(k), mu, s_n);
            out.off_grid_mass += w * (norm_cdf((lo - mu) / s_n) + norm_cdf((mu - hi) / s_n));
        }
        return out;
    }

    // Exponential law: n = 0 Gaussian plus a kink-aware quadrature of the
    // compound Poisson kernel against the Gaussian. Deliberately independent of
    // the spectral machinery.
    const auto* ej = law.get_if<ExponentialJump>();
    const double rate = ej->rate;
    detail::add_gaussian_mixture(out.smooth, {{0.0, poisson_weight(lambda_tau, 0)}}, center, sd,
                                 out.off_grid_mass);
    std::vector<double> log_w(order + 1), lgam(order + 1);
    for (int n = 1; n <= order; ++n) {
        log_w[n] = -lambda_tau + n * std::log(lambda_tau) - std::lgamma(n + 1.0);
        lgam[n] = std::lgamma(static_cast<double>(n));
    }
    auto cp_kernel = [&](double u) {
        if (u < 0.0) return 0.0;
        if (u == 0.0) return 0.5 * rate * std::exp(log_w[1]);  // jump midpoint
        const double lu = std::log(u);
        double v = 0.0;
        for (int n = 1; n <= order; ++n)
            v += std::exp(log_w[n] + n * std::log(rate) + (n - 1) * lu - rate * u - lgam[n]);
        return v;
    };
    const double u_max = (order + 40.0) / rate;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double y = grid.node(k);
        const double a = std::max(0.0, y - center - 10.0 * sd);
        const double b = std::min(u_max, y - center + 10.0 * sd);
        if (b <= a) continue;
        out.smooth.values[k] += adaptive_simpson(
            [&](double u) { return cp_kernel(u) * norm_pdf(y - u, center, sd); }, a, b, 1e-11);
    }
    // off-grid jump mass: bound by the CP tail beyond the grid's right edge
    const double span = grid.node(grid.size() - 1) - center;
    for (int n = 1; n <= order; ++n)
        out.off_grid_mass +=
            poisson_weight(lambda_tau, n) * (1.0 - ConvolvedLaw(law, n).cdf(span));
    return out;
}

inline Density jump_diffusion_density(const JumpDiffusionParams& p, double s, double t,
                                      const Grid1D& grid, const SeriesTruncation& trunc = {},
                                      double x0 = 0.0) {
    if (!(t > s)) throw validation_error("jump_diffusion_density: requires t > s");
    if (!(p.sigma > 0.0)) throw validation_error("jump_diffusion_density: sigma must be positive");
    const double tau = t - s;
    return jump_diffusion_density_total(p.gamma * tau, p.sigma * p.sigma * tau,
                                        p.intensity * tau, p.law, grid, trunc, x0);
}

// ---------------------------------------------------------------------------
// Discounted fundamental solution of the pricing equation: e^{-r tau} times the
// risk-neutral log-price transition density started from ln(spot).
// Under the exp_minus_one transform the log-jump law is the model law itself
// and the Gaussian-mixture series applies; the identity transform routes
// through the spectral form of the log-jump characteristic function.
// ---------------------------------------------------------------------------
inline Density fundamental_solution(const LevyModel& model, double s, double T,
                                    const Grid1D& grid, const SeriesTruncation& trunc = {},
                                    const NumericsPolicy& policy = {}) {
    if (!(T > s)) throw validation_error("fundamental_solution: requires T > s");
    const double tau = T - s;
    const double discount = std::exp(-model.rate() * tau);
    const double drift = model.total_log_drift(s, T);
    const double variance = model.variance(s, T);
    const double x0 = std::log(model.spot());

    Density out{GridFunction::zero(grid)};
    if (model.intensity() == 0.0 || model.transform() == Transform::exp_minus_one) {
        out = jump_diffusion_density_total(drift, variance, model.intensity() * tau,
                                           model.law(), grid, trunc, x0);
    } else {
        // identity transform: log-jump cf E[(1+Z)^{i theta}] via the multiplier
        std::vector<std::complex<double>> m(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double th = grid.frequency(j);
            std::complex<double> expo(-0.5 * variance * th * th, th * (x0 + drift));
            expo += model.intensity() * tau * (model.log_jump_cf(th) - 1.0);
            m[j] = std::exp(expo);
        }
        out.smooth = inverse_transform(m, grid, policy);
    }
    for (auto& v : out.smooth.values) v *= discount;
    for (auto& a : out.atoms) a.mass *= discount;
    return out;
}

} // namespace kfe
