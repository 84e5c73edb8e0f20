#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <utility>

#include "kfe/errors.hpp"
#include "kfe/jump_laws.hpp"
#include "kfe/math_util.hpp"

namespace kfe {

// Relative jump size of the spot: S -> S (1 + c(z)).
// exp_minus_one is the lognormal-style transform c(z) = e^z - 1, under which
// the law itself is the law of the log-price jumps. identity means c(z) = z
// and requires the law's support to stay above -1.
enum class Transform { identity, exp_minus_one };

inline const char* to_string(Transform t) {
    return t == Transform::identity ? "identity" : "exp_minus_one";
}

// Risk-neutral market: dS = S [ r dt + sigma(t) dW + int c(z) (mu - nu)(dt,dz) ],
// nu(dz) = lambda p(z) dz. Prices depend only on these inputs; a physical
// appreciation rate can be recorded but never enters a price.
class LevyModel {
public:
    LevyModel(double spot, double rate, double sigma, double intensity, JumpLaw law,
              Transform transform = Transform::exp_minus_one)
        : spot_(spot),
          rate_(rate),
          sigma_const_(sigma),
          intensity_(intensity),
          law_(std::move(law)),
          transform_(transform) {
        validate();
    }

    // Time-dependent volatility; enters prices only through int sigma^2.
    LevyModel(double spot, double rate, std::function<double(double)> sigma_fn,
              double intensity, JumpLaw law, Transform transform = Transform::exp_minus_one)
        : spot_(spot),
          rate_(rate),
          sigma_const_(0.0),
          sigma_fn_(std::move(sigma_fn)),
          intensity_(intensity),
          law_(std::move(law)),
          transform_(transform) {
        validate();
    }

    double spot() const { return spot_; }
    double rate() const { return rate_; }
    double intensity() const { return intensity_; }
    const JumpLaw& law() const { return law_; }
    Transform transform() const { return transform_; }
    bool sigma_is_constant() const { return !sigma_fn_; }

    double sigma_const() const {
        if (sigma_fn_)
            throw capability_error("operation requires constant volatility");
        return sigma_const_;
    }

    // int_t^T sigma^2(u) du
    double variance(double t, double T) const {
        if (!sigma_fn_) return sigma_const_ * sigma_const_ * (T - t);
        auto sq = [this](double u) {
            const double s = sigma_fn_(u);
            if (!(s > 0.0)) throw validation_error("model.sigma: must stay positive");
            return s * s;
        };
        const double coarse = adaptive_simpson(sq, t, T, 1e-9);
        return adaptive_simpson(sq, t, T, 1e-12 * std::max(1.0, std::abs(coarse)));
    }

    // kappa = E[c(Z)], the mean relative jump entering the drift compensation.
    double mean_jump_factor() const {
        if (!mean_c_) {
            if (intensity_ == 0.0)
                mean_c_ = 0.0;
            else if (transform_ == Transform::exp_minus_one)
                mean_c_ = exp_moment(law_) - 1.0;
            else
                mean_c_ = moments(law_).mean;
        }
        return *mean_c_;
    }

    // Total log-price drift over [t,T]: r tau - v/2 - lambda kappa tau.
    double total_log_drift(double t, double T) const {
        const double tau = T - t;
        return rate_ * tau - 0.5 * variance(t, T) - intensity_ * mean_jump_factor() * tau;
    }

    // E[e^{i theta eta}] for the log-price jump eta = ln(1 + c(Z)).
    std::complex<double> log_jump_cf(double theta) const {
        if (transform_ == Transform::exp_minus_one)
            return characteristic_function(law_, theta);
        if (law_.is_discrete()) {
            std::complex<double> s = 0.0;
            for (const auto& a : log_jump_atoms().atoms)
                s += a.mass * std::polar(1.0, theta * a.location);
            return s;
        }
        return log_jump_kernel_->integral(theta);
    }

    // First and second raw moments of the log-price jump.
    Moments log_jump_moments() const {
        if (transform_ == Transform::exp_minus_one) return moments(law_);
        Moments m;
        if (law_.is_discrete()) {
            for (const auto& a : log_jump_atoms().atoms) {
                m.mean += a.mass * a.location;
                m.second_moment += a.mass * a.location * a.location;
            }
            return m;
        }
        const auto [lo, hi] = integration_support(law_);
        const ConvolvedLaw cl(law_, 1);
        m.mean = adaptive_simpson([&](double z) { return cl.pdf(z) * std::log1p(z); }, lo, hi,
                                  1e-12);
        m.second_moment = adaptive_simpson(
            [&](double z) {
                const double l = std::log1p(z);
                return cl.pdf(z) * l * l;
            },
            lo, hi, 1e-12);
        return m;
    }

    // Characteristic function of ln S_T - ln S_t under the pricing measure.
    std::complex<double> log_increment_cf(double theta, double t, double T) const {
        const double tau = T - t;
        const double v = variance(t, T);
        std::complex<double> expo(-0.5 * v * theta * theta,
                                  theta * total_log_drift(t, T));
        if (intensity_ > 0.0)
            expo += intensity_ * tau * (log_jump_cf(theta) - 1.0);
        return std::exp(expo);
    }

private:
    // Runs all construction-time checks and warms every lazy cache, so const
    // accessors on a shared model are race-free afterwards.
    void validate() {
        if (!(spot_ > 0.0)) throw validation_error("model.spot: must be positive");
        if (!std::isfinite(rate_)) throw validation_error("model.rate: must be finite");
        if (!sigma_fn_ && !(sigma_const_ > 0.0))
            throw validation_error("model.sigma: must be positive");
        if (intensity_ < 0.0) throw validation_error("model.intensity: must be non-negative");
        if (intensity_ > 0.0) {
            if (transform_ == Transform::identity && law_.support_lower() <= -1.0)
                throw validation_error(
                    "model.law: limited liability requires c(z) > -1 on the law's support "
                    "under the identity transform");
            mean_jump_factor();  // forces the compensator check (may throw)
            if (transform_ == Transform::identity && law_.is_discrete()) log_jump_atoms();
            if (transform_ == Transform::identity && !law_.is_discrete()) {
                // density of eta = ln(1+Z) in the eta variable, sampled once;
                // log_jump_cf is then a cheap oscillatory sum per frequency.
                // The limited-liability check leaves the exponential law as the
                // only continuous member here; its one-sided (right-limit)
                // density is what the panel quadrature needs at w = 0.
                const double rate = law_.get_if<ExponentialJump>()->rate;
                log_jump_kernel_.emplace(
                    [rate](double w) { return rate * std::exp(w - rate * std::expm1(w)); },
                    0.0, std::log1p(40.0 / rate), 768);
            }
        }
    }

    const AtomWindow& log_jump_atoms() const {
        if (log_atoms_.atoms.empty()) {
            constexpr double inf = std::numeric_limits<double>::infinity();
            auto w = ConvolvedLaw(law_, 1).atoms_in(-inf, inf, 1e-16);
            for (auto& a : w.atoms) a.location = std::log1p(a.location);
            log_atoms_ = std::move(w);
        }
        return log_atoms_;
    }

    double spot_;
    double rate_;
    double sigma_const_;
    std::function<double(double)> sigma_fn_;
    double intensity_;
    JumpLaw law_;
    Transform transform_;
    std::optional<OscillatoryKernel> log_jump_kernel_;
    mutable std::optional<double> mean_c_;
    mutable AtomWindow log_atoms_;
};

// The passage from physical to pricing dynamics: the appreciation rate b is
// discarded (it does not enter prices) and the jump compensation is validated.
// Kept as an explicit step so the martingale property is testable against it.
inline LevyModel risk_neutralize(double /*physical_drift*/, LevyModel model) {
    model.mean_jump_factor();
    return model;
}

} // namespace kfe
