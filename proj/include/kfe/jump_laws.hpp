#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kfe/errors.hpp"
#include "kfe/grid.hpp"
#include "kfe/math_util.hpp"

namespace kfe {

// ---------------------------------------------------------------------------
// The jump-size distribution family. All members have finite moments of every
// order we use; heavy-tailed laws are out of scope.
// ---------------------------------------------------------------------------

struct UnitJump {
    double location = 0.0;
};
struct DiscreteJump {
    std::vector<std::pair<double, double>> atoms;  // (location, probability)
};
struct GeometricJump {
    double success_prob = 0.5;  // support {1,2,...}, mass p(1-p)^{k-1}
};
struct BinomialJump {
    int trials = 1;
    double success_prob = 0.5;
};
struct PoissonJump {
    double rate = 1.0;  // Poisson-distributed jump size
};
struct ExponentialJump {
    double rate = 1.0;
};
struct NormalJump {
    double mean = 0.0;
    double stddev = 1.0;
};

class JumpLaw {
public:
    using Variant = std::variant<UnitJump, DiscreteJump, GeometricJump, BinomialJump,
                                 PoissonJump, ExponentialJump, NormalJump>;

    JumpLaw(Variant v) : v_(std::move(v)) { validate(); }

    static JumpLaw unit(double a) { return JumpLaw(UnitJump{a}); }
    static JumpLaw discrete(std::vector<std::pair<double, double>> atoms) {
        return JumpLaw(DiscreteJump{std::move(atoms)});
    }
    static JumpLaw geometric(double p) { return JumpLaw(GeometricJump{p}); }
    static JumpLaw binomial(int m, double p) { return JumpLaw(BinomialJump{m, p}); }
    static JumpLaw poisson(double r) { return JumpLaw(PoissonJump{r}); }
    static JumpLaw exponential(double r) { return JumpLaw(ExponentialJump{r}); }
    static JumpLaw normal(double mu, double sigma) { return JumpLaw(NormalJump{mu, sigma}); }

    const Variant& dist() const { return v_; }

    template <class T>
    const T* get_if() const {
        return std::get_if<T>(&v_);
    }

    bool is_discrete() const {
        return !std::holds_alternative<ExponentialJump>(v_) &&
               !std::holds_alternative<NormalJump>(v_);
    }

    // Infimum of the support; -inf for Normal.
    double support_lower() const {
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, UnitJump>) return d.location;
                else if constexpr (std::is_same_v<T, DiscreteJump>) {
                    double lo = std::numeric_limits<double>::infinity();
                    for (const auto& [x, p] : d.atoms) lo = std::min(lo, x);
                    return lo;
                } else if constexpr (std::is_same_v<T, GeometricJump>) return 1.0;
                else if constexpr (std::is_same_v<T, ExponentialJump>) return 0.0;
                else if constexpr (std::is_same_v<T, NormalJump>)
                    return -std::numeric_limits<double>::infinity();
                else return 0.0;  // Binomial, Poisson
            },
            v_);
    }

private:
    void validate() const {
        std::visit(
            [](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, UnitJump>) {
                    if (!std::isfinite(d.location))
                        throw validation_error("unit law: location must be finite");
                } else if constexpr (std::is_same_v<T, DiscreteJump>) {
                    if (d.atoms.empty())
                        throw validation_error("discrete law: needs at least one atom");
                    double total = 0.0;
                    for (const auto& [x, p] : d.atoms) {
                        if (!std::isfinite(x))
                            throw validation_error("discrete law: atom location must be finite");
                        if (!(p > 0.0))
                            throw validation_error("discrete law: atom probabilities must be positive");
                        total += p;
                    }
                    if (std::abs(total - 1.0) > 1e-12)
                        throw validation_error("discrete law: probabilities must sum to 1");
                } else if constexpr (std::is_same_v<T, GeometricJump>) {
                    if (!(d.success_prob > 0.0 && d.success_prob < 1.0))
                        throw validation_error("geometric law: probability must lie in (0,1)");
                } else if constexpr (std::is_same_v<T, BinomialJump>) {
                    if (d.trials < 1)
                        throw validation_error("binomial law: trial count must be positive");
                    if (!(d.success_prob > 0.0 && d.success_prob < 1.0))
                        throw validation_error("binomial law: probability must lie in (0,1)");
                } else if constexpr (std::is_same_v<T, PoissonJump>) {
                    if (!(d.rate > 0.0))
                        throw validation_error("poisson law: rate must be positive");
                } else if constexpr (std::is_same_v<T, ExponentialJump>) {
                    if (!(d.rate > 0.0))
                        throw validation_error("exponential law: rate must be positive");
                } else if constexpr (std::is_same_v<T, NormalJump>) {
                    if (!std::isfinite(d.mean) || !(d.stddev > 0.0))
                        throw validation_error("normal law: requires finite mean and positive stddev");
                }
            },
            v_);
    }

    Variant v_;
};

// E[e^{i theta xi}]; |result| <= 1 for every member of the family.
inline std::complex<double> characteristic_function(const JumpLaw& law, double theta) {
    using C = std::complex<double>;
    const C i(0.0, 1.0);
    return std::visit(
        [&](const auto& d) -> C {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UnitJump>) {
                return std::polar(1.0, theta * d.location);
            } else if constexpr (std::is_same_v<T, DiscreteJump>) {
                C s = 0.0;
                for (const auto& [x, p] : d.atoms) s += p * std::polar(1.0, theta * x);
                return s;
            } else if constexpr (std::is_same_v<T, GeometricJump>) {
                const C e = std::polar(1.0, theta);
                return d.success_prob * e / (1.0 - (1.0 - d.success_prob) * e);
            } else if constexpr (std::is_same_v<T, BinomialJump>) {
                const C base = 1.0 - d.success_prob + d.success_prob * std::polar(1.0, theta);
                return std::pow(base, d.trials);
            } else if constexpr (std::is_same_v<T, PoissonJump>) {
                return std::exp(d.rate * (std::polar(1.0, theta) - 1.0));
            } else if constexpr (std::is_same_v<T, ExponentialJump>) {
                return d.rate / (d.rate - i * theta);
            } else {  // NormalJump
                return std::exp(i * theta * d.mean - 0.5 * d.stddev * d.stddev * theta * theta);
            }
        },
        law.dist());
}

struct Moments {
    double mean = 0.0;
    double second_moment = 0.0;  // raw second moment E[xi^2]
};

inline Moments moments(const JumpLaw& law) {
    return std::visit(
        [](const auto& d) -> Moments {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UnitJump>) {
                return {d.location, d.location * d.location};
            } else if constexpr (std::is_same_v<T, DiscreteJump>) {
                Moments m;
                for (const auto& [x, p] : d.atoms) {
                    m.mean += p * x;
                    m.second_moment += p * x * x;
                }
                return m;
            } else if constexpr (std::is_same_v<T, GeometricJump>) {
                const double p = d.success_prob;
                return {1.0 / p, (2.0 - p) / (p * p)};
            } else if constexpr (std::is_same_v<T, BinomialJump>) {
                const double mp = d.trials * d.success_prob;
                return {mp, mp * (1.0 - d.success_prob) + mp * mp};
            } else if constexpr (std::is_same_v<T, PoissonJump>) {
                return {d.rate, d.rate + d.rate * d.rate};
            } else if constexpr (std::is_same_v<T, ExponentialJump>) {
                return {1.0 / d.rate, 2.0 / (d.rate * d.rate)};
            } else {  // NormalJump
                return {d.mean, d.mean * d.mean + d.stddev * d.stddev};
            }
        },
        law.dist());
}

// E[e^{xi}]. Throws when the moment-generating function diverges at 1
// (Exponential with rate <= 1, Geometric with (1-p)e >= 1).
inline double exp_moment(const JumpLaw& law) {
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UnitJump>) {
                return std::exp(d.location);
            } else if constexpr (std::is_same_v<T, DiscreteJump>) {
                double s = 0.0;
                for (const auto& [x, p] : d.atoms) s += p * std::exp(x);
                return s;
            } else if constexpr (std::is_same_v<T, GeometricJump>) {
                const double q = (1.0 - d.success_prob) * std::numbers::e;
                if (q >= 1.0)
                    throw validation_error(
                        "geometric law: E[e^xi] diverges for p <= 1-1/e; the exp-jump "
                        "compensator is undefined");
                return d.success_prob * std::numbers::e / (1.0 - q);
            } else if constexpr (std::is_same_v<T, BinomialJump>) {
                return std::pow(1.0 - d.success_prob + d.success_prob * std::numbers::e, d.trials);
            } else if constexpr (std::is_same_v<T, PoissonJump>) {
                return std::exp(d.rate * (std::numbers::e - 1.0));
            } else if constexpr (std::is_same_v<T, ExponentialJump>) {
                if (d.rate <= 1.0)
                    throw validation_error(
                        "exponential law: E[e^xi] diverges for rate <= 1; the exp-jump "
                        "compensator is undefined");
                return d.rate / (d.rate - 1.0);
            } else {  // NormalJump
                return std::exp(d.mean + 0.5 * d.stddev * d.stddev);
            }
        },
        law.dist());
}

// Inverse CDF; one uniform in, one variate out (constant stream consumption).
inline double quantile(const JumpLaw& law, double u) {
    if (!(u > 0.0 && u < 1.0)) throw validation_error("quantile: u must lie in (0,1)");
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UnitJump>) {
                return d.location;
            } else if constexpr (std::is_same_v<T, DiscreteJump>) {
                double cum = 0.0;
                for (const auto& [x, p] : d.atoms) {
                    cum += p;
                    if (u <= cum) return x;
                }
                return d.atoms.back().first;
            } else if constexpr (std::is_same_v<T, GeometricJump>) {
                const double k = std::ceil(std::log1p(-u) / std::log1p(-d.success_prob));
                return std::max(1.0, k);
            } else if constexpr (std::is_same_v<T, BinomialJump>) {
                const double p = d.success_prob;
                double pmf = std::pow(1.0 - p, d.trials);
                double cum = pmf;
                int k = 0;
                while (u > cum && k < d.trials) {
                    pmf *= p / (1.0 - p) * static_cast<double>(d.trials - k) /
                           static_cast<double>(k + 1);
                    ++k;
                    cum += pmf;
                }
                return static_cast<double>(k);
            } else if constexpr (std::is_same_v<T, PoissonJump>) {
                double pmf = std::exp(-d.rate);
                double cum = pmf;
                int k = 0;
                const int cap = static_cast<int>(d.rate + 40.0 * std::sqrt(d.rate) + 100.0);
                while (u > cum && k < cap) {
                    pmf *= d.rate / static_cast<double>(k + 1);
                    ++k;
                    cum += pmf;
                }
                return static_cast<double>(k);
            } else if constexpr (std::is_same_v<T, ExponentialJump>) {
                return -std::log1p(-u) / d.rate;
            } else {  // NormalJump
                return d.mean + d.stddev * inv_norm_cdf(u);
            }
        },
        law.dist());
}

// Integration window holding all but ~1e-16 of a continuous law's mass.
inline std::pair<double, double> integration_support(const JumpLaw& law) {
    if (const auto* e = law.get_if<ExponentialJump>()) return {0.0, 40.0 / e->rate};
    if (const auto* n = law.get_if<NormalJump>())
        return {n->mean - 10.0 * n->stddev, n->mean + 10.0 * n->stddev};
    throw validation_error("integration_support: continuous laws only");
}

struct LawAtom {
    double location = 0.0;
    double mass = 0.0;
};

struct AtomWindow {
    std::vector<LawAtom> atoms;
    double outside_mass = 0.0;  // law mass falling outside [lo, hi]
};

// ---------------------------------------------------------------------------
// ConvolvedLaw: the exact law of the n-fold sum, in closed form per family
// member. n = 0 denotes the Dirac mass at 0.
// ---------------------------------------------------------------------------
class ConvolvedLaw {
public:
    ConvolvedLaw(JumpLaw base, int n) : base_(std::move(base)), n_(n) {
        if (n < 0) throw validation_error("ConvolvedLaw: order must be non-negative");
    }

    int order() const { return n_; }
    const JumpLaw& base() const { return base_; }

    bool is_discrete() const { return n_ == 0 || base_.is_discrete(); }

    // Atoms inside [lo, hi] plus the mass falling outside. Lattice laws with
    // infinite support are enumerated until the residual tail drops below
    // tail_tol; that residual is reported as outside mass.
    AtomWindow atoms_in(double lo, double hi, double tail_tol = 1e-16,
                        std::size_t max_atoms = 1'000'000) const {
        if (!is_discrete())
            throw validation_error("atoms_in: law is not atomic");
        AtomWindow w;
        auto push = [&](double x, double m) {
            if (x >= lo && x <= hi)
                w.atoms.push_back({x, m});
            else
                w.outside_mass += m;
        };

        if (n_ == 0) {
            push(0.0, 1.0);
            return w;
        }
        if (const auto* u = base_.get_if<UnitJump>()) {
            push(n_ * u->location, 1.0);
            return w;
        }
        if (const auto* dj = base_.get_if<DiscreteJump>()) {
            for (const auto& [x, m] : enumerate_discrete(*dj, n_, max_atoms)) push(x, m);
            return w;
        }
        if (const auto* b = base_.get_if<BinomialJump>()) {
            const long long trials = static_cast<long long>(b->trials) * n_;
            const double p = b->success_prob;
            const double lq = std::log1p(-p), lp = std::log(p);
            for (long long k = 0; k <= trials; ++k) {
                const double lpmf = std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) -
                                    std::lgamma(trials - k + 1.0) + k * lp + (trials - k) * lq;
                push(static_cast<double>(k), std::exp(lpmf));
            }
            return w;
        }
        if (const auto* po = base_.get_if<PoissonJump>()) {
            const double r = n_ * po->rate;
            double pmf = std::exp(-r), cum = 0.0;
            for (long long k = 0;; ++k) {
                push(static_cast<double>(k), pmf);
                cum += pmf;
                if ((1.0 - cum < tail_tol && k > r) || static_cast<double>(k) > hi + 1.0) {
                    w.outside_mass += std::max(0.0, 1.0 - cum);
                    break;
                }
                pmf *= r / static_cast<double>(k + 1);
            }
            return w;
        }
        if (const auto* ge = base_.get_if<GeometricJump>()) {
            // Negative binomial on {n, n+1, ...}: C(k-1, n-1) p^n (1-p)^{k-n}
            const double p = ge->success_prob;
            double pmf = std::pow(p, n_);
            double cum = 0.0;
            for (long long k = n_;; ++k) {
                push(static_cast<double>(k), pmf);
                cum += pmf;
                if ((1.0 - cum < tail_tol && k > n_ / p) || static_cast<double>(k) > hi + 1.0) {
                    w.outside_mass += std::max(0.0, 1.0 - cum);
                    break;
                }
                pmf *= (1.0 - p) * static_cast<double>(k) / static_cast<double>(k + 1 - n_);
            }
            return w;
        }
        throw validation_error("atoms_in: unsupported law");
    }

    // Density of the continuous convolved laws (Erlang; scaled Normal). At the
    // Erlang(1) jump the two-sided midpoint is returned: that is the value the
    // discrete transform algebra is exact under.
    double pdf(double x) const {
        if (is_discrete()) throw validation_error("pdf: law is atomic");
        if (const auto* e = base_.get_if<ExponentialJump>()) {
            const double r = e->rate;
            if (x < 0.0) return 0.0;
            if (x == 0.0) return n_ == 1 ? 0.5 * r : 0.0;
            return std::exp(n_ * std::log(r) + (n_ - 1) * std::log(x) - r * x -
                            std::lgamma(static_cast<double>(n_)));
        }
        const auto* nj = base_.get_if<NormalJump>();
        return norm_pdf(x, n_ * nj->mean, nj->stddev * std::sqrt(static_cast<double>(n_)));
    }

    double cdf(double x) const {
        if (is_discrete()) throw validation_error("cdf: law is atomic");
        if (const auto* e = base_.get_if<ExponentialJump>()) {
            if (x <= 0.0) return 0.0;
            // P(Erlang(n,r) <= x) = P(Poisson(r x) >= n)
            const double rx = e->rate * x;
            double pmf = std::exp(-rx), below = 0.0;
            for (int k = 0; k < n_; ++k) {
                below += pmf;
                pmf *= rx / static_cast<double>(k + 1);
            }
            return 1.0 - std::min(1.0, below);
        }
        const auto* nj = base_.get_if<NormalJump>();
        const double sd = nj->stddev * std::sqrt(static_cast<double>(n_));
        return norm_cdf((x - n_ * nj->mean) / sd);
    }

private:
    static std::map<std::int64_t, double> key_map(
        const std::vector<std::pair<double, double>>& atoms, double scale) {
        std::map<std::int64_t, double> m;
        for (const auto& [x, p] : atoms) m[std::llround(x * scale)] += p;
        return m;
    }

    static std::vector<std::pair<double, double>> enumerate_discrete(const DiscreteJump& d,
                                                                     int n,
                                                                     std::size_t max_atoms) {
        // Fixed-point keying collapses locations that coincide up to 1e-9.
        constexpr double scale = 1e9;
        std::map<std::int64_t, double> acc{{0, 1.0}};
        const auto base = key_map(d.atoms, scale);
        for (int i = 0; i < n; ++i) {
            std::map<std::int64_t, double> next;
            for (const auto& [x, p] : acc)
                for (const auto& [y, q] : base) next[x + y] += p * q;
            if (next.size() > max_atoms)
                throw resource_error(
                    "discrete convolution support exceeds the atom cap; use the "
                    "Fourier route instead");
            acc = std::move(next);
        }
        std::vector<std::pair<double, double>> out;
        out.reserve(acc.size());
        for (const auto& [k, p] : acc) out.emplace_back(static_cast<double>(k) / scale, p);
        return out;
    }

    JumpLaw base_;
    int n_;
};

inline ConvolvedLaw convolve_law(const JumpLaw& law, int n) { return ConvolvedLaw(law, n); }

// Characteristic function of the convolved law. For enumerable supports this
// sums over the exact atoms, which is the check that the convolution algebra
// and the power rule agree.
inline std::complex<double> characteristic_function(const ConvolvedLaw& cl, double theta) {
    if (cl.order() == 0) return 1.0;
    if (cl.is_discrete() &&
        (cl.base().get_if<DiscreteJump>() || cl.base().get_if<UnitJump>())) {
        const auto w = cl.atoms_in(-std::numeric_limits<double>::infinity(),
                                   std::numeric_limits<double>::infinity());
        std::complex<double> s = 0.0;
        for (const auto& a : w.atoms) s += a.mass * std::polar(1.0, theta * a.location);
        return s;
    }
    return std::pow(characteristic_function(cl.base(), theta),
                    static_cast<double>(cl.order()));
}

// Rasterize a law onto a grid: continuous laws sampled pointwise, atoms
// deposited as mass/spacing at the nearest node (exact total mass, location
// error of order one spacing).
inline GridFunction sample_density(const ConvolvedLaw& cl, const Grid1D& grid,
                                   double coverage_tol = 1e-10) {
    std::vector<double> v(grid.size(), 0.0);
    if (cl.is_discrete()) {
        const double half = 0.5 * grid.spacing();
        const auto w = cl.atoms_in(grid.x_min() - half, grid.node(grid.size() - 1) + half);
        if (w.outside_mass > coverage_tol)
            throw coverage_error("sample_density: " + std::to_string(w.outside_mass) +
                                 " of the law's mass falls outside the grid");
        for (const auto& a : w.atoms) {
            auto k = grid.nearest_index(a.location);
            k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(grid.size()) - 1);
            v[static_cast<std::size_t>(k)] += a.mass / grid.spacing();
        }
    } else {
        for (std::size_t k = 0; k < grid.size(); ++k) v[k] = cl.pdf(grid.node(k));
        const double outside = cl.cdf(grid.x_min()) + (1.0 - cl.cdf(grid.node(grid.size() - 1)));
        if (outside > coverage_tol)
            throw coverage_error("sample_density: " + std::to_string(outside) +
                                 " of the law's mass falls outside the grid");
    }
    return GridFunction(grid, std::move(v));
}

inline GridFunction sample_density(const JumpLaw& law, const Grid1D& grid,
                                   double coverage_tol = 1e-10) {
    return sample_density(ConvolvedLaw(law, 1), grid, coverage_tol);
}

// ---------------------------------------------------------------------------
// CLI/config syntax: unit:a | discrete:x1:p1,x2:p2,... | geometric:p |
// binomial:m:p | poisson:r | exponential:r | normal:mu:sigma
// ---------------------------------------------------------------------------
inline JumpLaw parse_law(const std::string& text) {
    auto fail = [&](const std::string& why) -> JumpLaw {
        throw validation_error("law '" + text + "': " + why);
    };
    const auto colon = text.find(':');
    if (colon == std::string::npos) return fail("expected kind:parameters");
    const std::string kind = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);

    auto to_double = [&](const std::string& s) {
        std::size_t pos = 0;
        double x = 0.0;
        try {
            x = std::stod(s, &pos);
        } catch (const std::exception&) {
            fail("'" + s + "' is not a number");
        }
        if (pos != s.size()) fail("'" + s + "' is not a number");
        return x;
    };
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, sep)) parts.push_back(item);
        return parts;
    };

    if (kind == "unit") return JumpLaw::unit(to_double(rest));
    if (kind == "geometric") return JumpLaw::geometric(to_double(rest));
    if (kind == "poisson") return JumpLaw::poisson(to_double(rest));
    if (kind == "exponential") return JumpLaw::exponential(to_double(rest));
    if (kind == "binomial") {
        const auto p = split(rest, ':');
        if (p.size() != 2) return fail("binomial needs m:p");
        const double m = to_double(p[0]);
        if (m != std::floor(m) || m < 1.0) return fail("trial count must be a positive integer");
        return JumpLaw::binomial(static_cast<int>(m), to_double(p[1]));
    }
    if (kind == "normal") {
        const auto p = split(rest, ':');
        if (p.size() != 2) return fail("normal needs mu:sigma");
        return JumpLaw::normal(to_double(p[0]), to_double(p[1]));
    }
    if (kind == "discrete") {
        std::vector<std::pair<double, double>> atoms;
        for (const auto& pair_text : split(rest, ',')) {
            const auto p = split(pair_text, ':');
            if (p.size() != 2) return fail("discrete atoms are x:p pairs");
            atoms.emplace_back(to_double(p[0]), to_double(p[1]));
        }
        return JumpLaw::discrete(std::move(atoms));
    }
    return fail("unknown law kind '" + kind + "'");
}

inline std::string law_to_string(const JumpLaw& law) {
    std::ostringstream os;
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, UnitJump>) os << "unit:" << d.location;
            else if constexpr (std::is_same_v<T, DiscreteJump>) {
                os << "discrete:";
                for (std::size_t i = 0; i < d.atoms.size(); ++i) {
                    if (i) os << ',';
                    os << d.atoms[i].first << ':' << d.atoms[i].second;
                }
            } else if constexpr (std::is_same_v<T, GeometricJump>) os << "geometric:" << d.success_prob;
            else if constexpr (std::is_same_v<T, BinomialJump>)
                os << "binomial:" << d.trials << ':' << d.success_prob;
            else if constexpr (std::is_same_v<T, PoissonJump>) os << "poisson:" << d.rate;
            else if constexpr (std::is_same_v<T, ExponentialJump>) os << "exponential:" << d.rate;
            else os << "normal:" << d.mean << ':' << d.stddev;
        },
        law.dist());
    return os.str();
}

} // namespace kfe
