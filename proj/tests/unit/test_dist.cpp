#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "dualcusum/config.hpp"
#include "dualcusum/dist.hpp"
#include "dualcusum/errors.hpp"

using namespace dualcusum;

namespace {

std::vector<DistributionSpec> sample_specs() {
    return {
        DistributionSpec::gaussian(-0.3, 1.0),
        DistributionSpec::laplace(0.2, 0.7),
        DistributionSpec::exponential(1.5),
        DistributionSpec::pareto(2.1, 1.0),
        DistributionSpec::lognormal(0.1, 0.7),
        moment_matched_spec(Family::Pareto, -0.3, 1.0, 2.1),
        moment_matched_spec(Family::Lognormal, -0.3, 1.0, 0.7),
    };
}

// Integral of f over the support, split at the kinks so tanh-sinh sees smooth pieces.
template <class F>
double integrate_over_support(const DistributionSpec& s, F f) {
    const auto [lo, hi] = support(s);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double mid = std::isfinite(lo) ? lo + 1.0 : (std::isfinite(hi) ? hi - 1.0 : s.shift + s.scale * s.p1);
    double total = 0.0;
    total += ts.integrate(f, lo, mid);
    total += ts.integrate(f, mid, hi);
    return total;
}

}  // namespace

TEST(Dist, GaussianModeDensity) {
    EXPECT_NEAR(density(DistributionSpec::gaussian(0.0, 1.0), 0.0), 0.3989422804, 1e-10);
}

TEST(Dist, ParetoDensityAtScale) {
    EXPECT_NEAR(density(DistributionSpec::pareto(2.1, 1.0), 1.0), 2.1, 1e-12);
}

TEST(Dist, DensityIntegratesToOne) {
    for (const auto& s : sample_specs()) {
        const double mass = integrate_over_support(s, [&](double x) { return density(s, x); });
        EXPECT_NEAR(mass, 1.0, 1e-6) << describe_spec(s);
    }
}

TEST(Dist, CdfIsMonotoneWithLimits) {
    for (const auto& s : sample_specs()) {
        double prev = 0.0;
        for (double x = -60.0; x <= 60.0; x += 0.05) {
            const double c = cdf(s, x);
            EXPECT_GE(c, prev - 1e-15);
            EXPECT_GE(c, 0.0);
            EXPECT_LE(c, 1.0);
            prev = c;
        }
        EXPECT_LT(cdf(s, -1e6), 1e-9);
        EXPECT_GT(cdf(s, 1e9), 1.0 - 1e-6);
    }
}

TEST(Dist, CdfAntiderivativeDifferentiatesToCdf) {
    for (const auto& s : sample_specs()) {
        for (double x : {-2.0, -0.4, 0.3, 1.7, 4.0}) {
            const double h = 1e-5;
            const double slope = (cdf_antiderivative(s, x + h) - cdf_antiderivative(s, x - h)) / (2 * h);
            EXPECT_NEAR(slope, cdf(s, x), 1e-5) << describe_spec(s) << " x=" << x;
        }
    }
}

TEST(Dist, MeanAndVarianceMatchQuadrature) {
    for (const auto& s : sample_specs()) {
        const double m = integrate_over_support(s, [&](double x) { return x * density(s, x); });
        const double m2 = integrate_over_support(s, [&](double x) { return (x - m) * (x - m) * density(s, x); });
        EXPECT_NEAR(mean(s), m, 1e-5 * std::max(1.0, std::abs(m))) << describe_spec(s);
        EXPECT_NEAR(variance(s), m2, 1e-3 * std::max(1.0, m2)) << describe_spec(s);
    }
}

TEST(Dist, SampleMeanMatches) {
    Rng rng = make_stream(42, 0);
    for (const auto& s : sample_specs()) {
        const int n = 400000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            sum += sample(s, rng);
        }
        const double se = std::sqrt(variance(s) / n);
        EXPECT_NEAR(sum / n, mean(s), 5 * se) << describe_spec(s);
    }
}

TEST(Dist, TailClasses) {
    EXPECT_EQ(classify_tail(DistributionSpec::gaussian(0, 1)), TailClass::Light);
    EXPECT_EQ(classify_tail(DistributionSpec::laplace(0, 1)), TailClass::Light);
    EXPECT_EQ(classify_tail(DistributionSpec::exponential(1)), TailClass::Light);
    EXPECT_EQ(classify_tail(DistributionSpec::pareto(2.1, 1)), TailClass::HeavySubexponential);
    EXPECT_EQ(classify_tail(DistributionSpec::lognormal(0, 1)), TailClass::HeavySubexponential);
}

TEST(Dist, InvalidParametersRejected) {
    EXPECT_THROW(validate(DistributionSpec::gaussian(0, 0)), ConfigError);
    EXPECT_THROW(validate(DistributionSpec::pareto(0, 1)), ConfigError);
    EXPECT_THROW(validate(DistributionSpec::pareto(2, -1)), ConfigError);
    EXPECT_THROW(validate(DistributionSpec::exponential(0)), ConfigError);
    EXPECT_THROW(parse_family("weibull"), ConfigError);
}

TEST(Dist, MomentMatchingGaussianAndLaplace) {
    const auto g = moment_matched_spec(Family::Gaussian, -0.3, 1.0);
    EXPECT_NEAR(mean(g), -0.3, 1e-12);
    EXPECT_NEAR(variance(g), 1.0, 1e-12);
    EXPECT_NEAR(density(g, -0.3), 0.3989422804, 1e-9);

    const auto l = moment_matched_spec(Family::Laplace, -0.3, 1.0);
    EXPECT_NEAR(mean(l), -0.3, 1e-12);
    EXPECT_NEAR(variance(l), 1.0, 1e-12);
    // Laplace(location, scale) has peak density 1 / (2 scale) = 1/sqrt(2) for scale 1/sqrt(2).
    EXPECT_NEAR(density(l, -0.3), 1.0 / std::numbers::sqrt2, 1e-9);
}

TEST(Dist, MomentMatchedParetoAgainstSampleMoments) {
    const auto p = moment_matched_spec(Family::Pareto, -0.3, 1.0, 2.1);
    Rng rng = make_stream(2024, 0);
    const int n = 10'000'000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sum += sample(p, rng);
    }
    // The sample mean is the stable moment for K = 2.1; the variance is
    // checked against quadrature in MeanAndVarianceMatchQuadrature.
    EXPECT_NEAR(sum / n, -0.3, 0.01 * 0.3);
    EXPECT_NEAR(mean(p), -0.3, 1e-12);
    EXPECT_NEAR(variance(p), 1.0, 1e-12);
}

TEST(Dist, MomentMatchingInfeasible) {
    EXPECT_THROW(moment_matched_spec(Family::Pareto, -0.3, 1.0, 2.0), InfeasibleError);
    EXPECT_THROW(moment_matched_spec(Family::Pareto, -0.3, 1.0), InfeasibleError);
    EXPECT_THROW(moment_matched_spec(Family::Gaussian, -0.3, -1.0), InfeasibleError);
}

TEST(Dist, GaussianLlrClosedForm) {
    const auto z = llr_increment_law(DistributionSpec::gaussian(0, 1), DistributionSpec::gaussian(0.6, 1),
                                     Regime::PreChange);
    EXPECT_NEAR(z->mean(), -0.18, 1e-12);
    EXPECT_NEAR(z->variance(), 0.36, 1e-12);
    const auto z1 = llr_increment_law(DistributionSpec::gaussian(0, 1), DistributionSpec::gaussian(0.6, 1),
                                      Regime::PostChange);
    EXPECT_NEAR(z1->mean(), 0.18, 1e-12);
}

TEST(Dist, IdenticalLawsGiveZeroLlr) {
    const auto f = DistributionSpec::laplace(0.0, 1.0);
    const auto z = llr_increment_law(f, f, Regime::PreChange);
    EXPECT_EQ(z->mean(), 0.0);
    EXPECT_EQ(z->variance(), 0.0);
}

TEST(Dist, ParetoLlrMatchesDensityRatio) {
    // Closed-form shifted exponential against sampled log density ratios.
    const auto f0 = DistributionSpec::pareto(3.0, 1.0);
    const auto f1 = DistributionSpec::pareto(2.0, 1.0);
    const auto z = llr_increment_law(f0, f1, Regime::PreChange);
    Rng rng = make_stream(5, 0);
    const int n = 200000;
    int below = 0;
    for (int i = 0; i < n; ++i) {
        const double x = sample(f0, rng);
        below += (log_density(f1, x) - log_density(f0, x)) <= 0.2 ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(below) / n, z->cdf(0.2), 0.005);
}

// Under f0 = Pareto(a + 1) the LLR tail decays at rate a + 1; under f1 = Pareto(a) at rate a.
TEST(Dist, ParetoPairLlrTailRates) {
    for (double a : {1.0, 2.0}) {
        const auto f0 = DistributionSpec::pareto(a + 1.0, 1.0);
        const auto f1 = DistributionSpec::pareto(a, 1.0);
        const auto pre = llr_increment_law(f0, f1, Regime::PreChange);
        const auto post = llr_increment_law(f0, f1, Regime::PostChange);
        const double z1 = 1.0;
        const double z2 = 3.0;
        const double pre_rate = -std::log((1 - pre->cdf(z2)) / (1 - pre->cdf(z1))) / (z2 - z1);
        const double post_rate = -std::log((1 - post->cdf(z2)) / (1 - post->cdf(z1))) / (z2 - z1);
        EXPECT_NEAR(pre_rate, a + 1.0, 1e-9);
        EXPECT_NEAR(post_rate, a, 1e-9);
        EXPECT_EQ(pre->tail(), TailClass::Light);
    }
}

TEST(Dist, LlrSupportMismatch) {
    EXPECT_THROW(llr_increment_law(DistributionSpec::pareto(3, 1), DistributionSpec::pareto(2, 2), Regime::PreChange),
                 DomainMismatchError);
    EXPECT_THROW(
        llr_increment_law(DistributionSpec::exponential(1), DistributionSpec::gaussian(0, 1), Regime::PreChange),
        DomainMismatchError);
}

TEST(Dist, EmpiricalLawIsExactStepFunction) {
    EmpiricalLaw law({3.0, -1.0, 1.0, 1.0}, TailClass::Light, "toy");
    EXPECT_DOUBLE_EQ(law.mean(), 1.0);
    EXPECT_DOUBLE_EQ(law.cdf(-2.0), 0.0);
    EXPECT_DOUBLE_EQ(law.cdf(1.0), 0.75);
    EXPECT_DOUBLE_EQ(law.cdf(3.0), 1.0);
    // G(x) = E[(x - Z)^+]
    EXPECT_DOUBLE_EQ(law.cdf_antiderivative(2.0), (3.0 + 1.0 + 1.0) / 4.0);
    EXPECT_DOUBLE_EQ(law.excess_mean(0.0), (3.0 + 1.0 + 1.0) / 4.0);
}

TEST(Dist, ShiftedIncrementLaw) {
    IncrementSpec spec{ShiftedIncrement{DistributionSpec::gaussian(1.0, 2.0), DistributionSpec::gaussian(2.0, 2.0), 1.5},
                       Regime::PreChange};
    const auto z = increment_law(spec);
    EXPECT_NEAR(z->mean(), -0.5, 1e-12);
    EXPECT_NEAR(z->variance(), 2.0, 1e-12);
    spec.under = Regime::PostChange;
    EXPECT_NEAR(increment_law(spec)->mean(), 0.5, 1e-12);
}

TEST(Dist, DriftSignsChecked) {
    EXPECT_THROW(check_drift_signs(ShiftedIncrement{DistributionSpec::gaussian(1.0, 1.0),
                                                    DistributionSpec::gaussian(2.0, 1.0), 0.0}),
                 ModelViolationError);
    EXPECT_NO_THROW(check_drift_signs(ShiftedIncrement{DistributionSpec::gaussian(-1.0, 1.0),
                                                       DistributionSpec::gaussian(1.0, 1.0), 0.0}));
}
