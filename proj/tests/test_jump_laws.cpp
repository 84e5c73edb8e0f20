#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "kfe/fourier.hpp"
#include "kfe/jump_laws.hpp"
#include "oracles.hpp"

using namespace kfe;

namespace {

std::vector<JumpLaw> whole_family() {
    return {JumpLaw::unit(1.0),
            JumpLaw::discrete({{1.0, 0.5}, {2.0, 0.5}}),
            JumpLaw::geometric(0.5),
            JumpLaw::binomial(3, 0.5),
            JumpLaw::poisson(1.0),
            JumpLaw::exponential(1.0),
            JumpLaw::normal(0.0, 1.0)};
}

} // namespace

TEST(JumpLaw, ValidatesParameters) {
    EXPECT_THROW(JumpLaw::geometric(0.0), validation_error);
    EXPECT_THROW(JumpLaw::geometric(1.0), validation_error);
    EXPECT_THROW(JumpLaw::binomial(0, 0.5), validation_error);
    EXPECT_THROW(JumpLaw::poisson(-1.0), validation_error);
    EXPECT_THROW(JumpLaw::exponential(0.0), validation_error);
    EXPECT_THROW(JumpLaw::normal(0.0, 0.0), validation_error);
    EXPECT_THROW(JumpLaw::discrete({{0.0, 0.5}, {1.0, 0.6}}), validation_error);
    EXPECT_THROW(JumpLaw::discrete({}), validation_error);
    EXPECT_NO_THROW(JumpLaw::discrete({{-0.5, 0.25}, {2.0, 0.75}}));
}

TEST(CharacteristicFunction, KnownValues) {
    // degenerate mass at zero
    EXPECT_EQ(characteristic_function(JumpLaw::unit(0.0), 3.7), std::complex<double>(1.0));
    // Gaussian at theta=1
    const auto g = characteristic_function(JumpLaw::normal(0.0, 1.0), 1.0);
    EXPECT_NEAR(g.real(), std::exp(-0.5), 1e-15);
    EXPECT_NEAR(g.imag(), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(g - std::complex<double>(0.60653065971263342)), 0.0, 1e-14);
    // binomial (0.5 + 0.5 e^{i pi})^3 = 0
    EXPECT_NEAR(std::abs(characteristic_function(JumpLaw::binomial(3, 0.5), pi)), 0.0, 1e-14);
}

TEST(CharacteristicFunction, BoundedByOneEverywhere) {
    for (const auto& law : whole_family())
        for (double th = -50.0; th <= 50.0; th += 0.37)
            EXPECT_LE(std::abs(characteristic_function(law, th)), 1.0 + 1e-12)
                << law_to_string(law) << " at theta=" << th;
}

TEST(CharacteristicFunction, ConvolvedLawIsPointwisePower) {
    for (const auto& law : whole_family()) {
        for (int n : {0, 1, 2, 5}) {
            const auto cl = convolve_law(law, n);
            for (double th = -50.0; th <= 50.0; th += 3.1) {
                const auto lhs = characteristic_function(cl, th);
                const auto rhs = std::pow(characteristic_function(law, th), n);
                EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-12)
                    << law_to_string(law) << " n=" << n << " theta=" << th;
            }
        }
    }
}

TEST(Moments, ClosedForms) {
    const auto mu = moments(JumpLaw::unit(-1.5));
    EXPECT_DOUBLE_EQ(mu.mean, -1.5);
    EXPECT_DOUBLE_EQ(mu.second_moment, 2.25);

    const auto me = moments(JumpLaw::exponential(2.0));
    EXPECT_DOUBLE_EQ(me.mean, 0.5);
    EXPECT_DOUBLE_EQ(me.second_moment, 0.5);

    const auto mb = moments(JumpLaw::binomial(3, 0.5));
    EXPECT_DOUBLE_EQ(mb.mean, 1.5);
    EXPECT_DOUBLE_EQ(mb.second_moment, 3.0);

    const auto mg = moments(JumpLaw::geometric(0.5));
    EXPECT_DOUBLE_EQ(mg.mean, 2.0);
    EXPECT_DOUBLE_EQ(mg.second_moment, 6.0);
}

TEST(ExpMoment, ClosedFormsAndDivergence) {
    EXPECT_NEAR(exp_moment(JumpLaw::normal(-0.1, 0.15)), std::exp(-0.1 + 0.5 * 0.15 * 0.15),
                1e-15);
    EXPECT_NEAR(exp_moment(JumpLaw::exponential(2.0)), 2.0, 1e-15);
    EXPECT_THROW(exp_moment(JumpLaw::exponential(1.0)), validation_error);
    EXPECT_THROW(exp_moment(JumpLaw::geometric(0.5)), validation_error);  // (1-p)e > 1
    EXPECT_NEAR(exp_moment(JumpLaw::geometric(0.9)),
                0.9 * std::numbers::e / (1.0 - 0.1 * std::numbers::e), 1e-14);
}

TEST(ConvolveLaw, OrderZeroIsDiracAtZero) {
    for (const auto& law : whole_family()) {
        const auto cl = convolve_law(law, 0);
        EXPECT_TRUE(cl.is_discrete());
        const auto w = cl.atoms_in(-1.0, 1.0);
        ASSERT_EQ(w.atoms.size(), 1u);
        EXPECT_EQ(w.atoms[0].location, 0.0);
        EXPECT_EQ(w.atoms[0].mass, 1.0);
        EXPECT_EQ(w.outside_mass, 0.0);
    }
}

TEST(ConvolveLaw, ErlangClosedForm) {
    // Exp(2)^{*3} = Erlang(3,2); density at x=1 is 2^3 * 1^2 * e^{-2} / 2!
    const auto cl = convolve_law(JumpLaw::exponential(2.0), 3);
    EXPECT_FALSE(cl.is_discrete());
    EXPECT_NEAR(cl.pdf(1.0), 0.54134113294645084, 1e-14);
    EXPECT_NEAR(cl.pdf(1.0), 4.0 * std::exp(-2.0), 1e-14);
}

TEST(ConvolveLaw, DiscreteEnumerationMatchesBruteForce) {
    const std::vector<std::pair<double, double>> atoms{{1.0, 0.5}, {2.0, 0.5}};
    const auto cl = convolve_law(JumpLaw::discrete(atoms), 2);
    const auto w = cl.atoms_in(-10.0, 10.0);
    const auto ref = oracle::convolve_atoms_brute(atoms, 2);
    ASSERT_EQ(w.atoms.size(), ref.size());
    for (const auto& a : w.atoms) {
        const auto it = ref.find(a.location);
        ASSERT_NE(it, ref.end()) << "unexpected atom at " << a.location;
        EXPECT_NEAR(a.mass, it->second, 1e-15);
    }
    // spec'd expected masses {2:0.25, 3:0.5, 4:0.25}
    EXPECT_NEAR(w.atoms[0].mass, 0.25, 1e-15);
    EXPECT_NEAR(w.atoms[1].mass, 0.5, 1e-15);
    EXPECT_NEAR(w.atoms[2].mass, 0.25, 1e-15);
}

TEST(ConvolveLaw, DiscreteSupportBlowUpIsResourceError) {
    // 20 irrational-ish spaced atoms, convolved 8 times: ~2.6e10 candidate sums.
    std::vector<std::pair<double, double>> atoms;
    for (int i = 0; i < 20; ++i) atoms.emplace_back(std::sqrt(2.0 + i), 0.05);
    EXPECT_THROW(convolve_law(JumpLaw::discrete(atoms), 8).atoms_in(-1e9, 1e9),
                 resource_error);
}

TEST(ConvolveLaw, NegativeBinomialAndPoissonMassesSumToOne) {
    for (int n : {1, 2, 5}) {
        const auto g = convolve_law(JumpLaw::geometric(0.4), n).atoms_in(-1.0, 1e9, 1e-15);
        double tot = g.outside_mass;
        for (const auto& a : g.atoms) tot += a.mass;
        EXPECT_NEAR(tot, 1.0, 1e-12);

        const auto p = convolve_law(JumpLaw::poisson(1.3), n).atoms_in(-1.0, 1e9, 1e-15);
        tot = p.outside_mass;
        for (const auto& a : p.atoms) tot += a.mass;
        EXPECT_NEAR(tot, 1.0, 1e-12);
    }
}

TEST(SampleDensity, DiracBecomesSingleNodeSpike) {
    Grid1D g(-16.0, 16.0, 1024);
    const auto f = sample_density(convolve_law(JumpLaw::unit(1.0), 0), g);
    const auto k0 = static_cast<std::size_t>(g.nearest_index(0.0));
    EXPECT_DOUBLE_EQ(f.values[k0], 1.0 / g.spacing());
    EXPECT_NEAR(integrate(f), 1.0, 1e-12);
}

TEST(SampleDensity, NormalIntegratesToOne) {
    Grid1D g(-16.0, 16.0, 4096);
    const auto f = sample_density(JumpLaw::normal(0.0, 1.0), g);
    EXPECT_NEAR(integrate(f), 1.0, 1e-10);
}

TEST(SampleDensity, GeometricMassesLandOnNodes) {
    Grid1D g(-64.0, 64.0, 8192);  // h = 1/64, integers on nodes
    const auto f = sample_density(JumpLaw::geometric(0.5), g);
    for (int k = 1; k <= 6; ++k) {
        const auto idx = static_cast<std::size_t>(g.nearest_index(k));
        EXPECT_NEAR(f.values[idx] * g.spacing(), std::pow(0.5, k), 1e-12);
    }
}

TEST(SampleDensity, AtomOutsideGridIsCoverageError) {
    Grid1D g(-2.0, 2.0, 16);
    EXPECT_THROW(sample_density(JumpLaw::unit(5.0), g), coverage_error);
}

TEST(SampleDensity, ClosedFormMatchesGridConvolutionPowers) {
    // P^{*n} sampled from the closed form vs n-fold numeric convolve().
    // h = 2^-10 keeps lattice atoms on nodes and the rectangle-rule O(h^2)
    // contamination from the exponential law's density jump below tolerance;
    // the origin node itself carries the jump's midpoint representation and is
    // compared separately.
    Grid1D g(-64.0, 64.0, 1 << 17);
    NumericsPolicy relaxed{.strict = false};
    for (const auto& law : whole_family()) {
        const bool kinked = law.get_if<ExponentialJump>() != nullptr;
        const auto base = sample_density(law, g);
        GridFunction numeric = base;
        for (int n = 2; n <= 5; ++n) {
            numeric = convolve(numeric, base, relaxed);
            const auto closed = sample_density(convolve_law(law, n), g);
            double worst = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (kinked && std::abs(g.node(k)) <= g.spacing()) continue;
                worst = std::max(worst, std::abs(numeric.values[k] - closed.values[k]));
            }
            EXPECT_LT(worst, 1e-6) << law_to_string(law) << " n=" << n;
        }
    }
}

TEST(ParseLaw, RoundTripsAndRejectsJunk) {
    for (const char* text :
         {"unit:1.5", "discrete:1:0.5,2:0.5", "geometric:0.25", "binomial:3:0.5",
          "poisson:1.7", "exponential:2", "normal:-0.1:0.15"}) {
        const auto law = parse_law(text);
        const auto again = parse_law(law_to_string(law));
        EXPECT_EQ(law_to_string(law), law_to_string(again));
    }
    EXPECT_THROW(parse_law("cauchy:1"), validation_error);
    EXPECT_THROW(parse_law("normal:0"), validation_error);
    EXPECT_THROW(parse_law("geometric:1.5"), validation_error);
    EXPECT_THROW(parse_law("binomial:2.5:0.5"), validation_error);
    EXPECT_THROW(parse_law("unit:abc"), validation_error);
}

TEST(Quantile, InvertsTheCdf) {
    // spot checks per kind
    EXPECT_DOUBLE_EQ(quantile(JumpLaw::unit(3.0), 0.9), 3.0);
    EXPECT_DOUBLE_EQ(quantile(JumpLaw::geometric(0.5), 0.49), 1.0);
    EXPECT_DOUBLE_EQ(quantile(JumpLaw::geometric(0.5), 0.51), 2.0);
    EXPECT_DOUBLE_EQ(quantile(JumpLaw::discrete({{-1.0, 0.3}, {2.0, 0.7}}), 0.29), -1.0);
    EXPECT_DOUBLE_EQ(quantile(JumpLaw::discrete({{-1.0, 0.3}, {2.0, 0.7}}), 0.31), 2.0);
    EXPECT_NEAR(quantile(JumpLaw::exponential(2.0), 0.5), std::log(2.0) / 2.0, 1e-14);
    EXPECT_NEAR(quantile(JumpLaw::normal(1.0, 2.0), 0.975), 1.0 + 2.0 * 1.959963984540054,
                1e-10);
    // binomial/poisson quantiles respect the cdf steps
    double cum = std::pow(0.5, 3);
    EXPECT_DOUBLE_EQ(quantile(JumpLaw::binomial(3, 0.5), cum * 0.999), 0.0);
    EXPECT_DOUBLE_EQ(quantile(JumpLaw::binomial(3, 0.5), cum * 1.001), 1.0);
    cum = std::exp(-1.0);
    EXPECT_DOUBLE_EQ(quantile(JumpLaw::poisson(1.0), cum * 0.999), 0.0);
    EXPECT_DOUBLE_EQ(quantile(JumpLaw::poisson(1.0), cum * 1.001), 1.0);
}
