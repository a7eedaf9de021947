#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dualcusum/cusum.hpp"
#include "dualcusum/errors.hpp"
#include "dualcusum/renewal.hpp"
#include "dualcusum/sim.hpp"

using namespace dualcusum;

namespace {

IncrementLawPtr gaussian(double m, double v = 1.0) { return make_law(DistributionSpec::gaussian(m, v)); }
IncrementLawPtr pareto(double m, double k = 2.1) { return make_law(moment_matched_spec(Family::Pareto, m, 1.0, k)); }

// 10^6-run Monte Carlo oracles (mean_fpt_monte_carlo, simulate_overshoots)
// computed once with fixed seeds and frozen here with their 95% half-widths.
struct Frozen {
    double gamma;
    double mean;
    double ci;
};
constexpr Frozen kParetoFptOracle[] = {
    {5.0, 794.564, 1.555},
    {6.0, 1098.91, 2.153},
    {7.0, 1461.52, 2.866},
    {8.0, 1877.55, 3.681},
};
constexpr double kParetoOvershootOracle = 7.38378;  // EZ = -0.3, gamma = 8

}  // namespace

TEST(Renewal, GridInterpolation) {
    GridFunction f{2.0, 1.0, {0.0, 2.0, 6.0}};
    EXPECT_DOUBLE_EQ(f.at(0.5), 1.0);
    EXPECT_DOUBLE_EQ(f.at(1.5), 4.0);
    EXPECT_DOUBLE_EQ(f.at(5.0), 6.0);
    EXPECT_DOUBLE_EQ(f.at(-1.0), 0.0);
}

TEST(Renewal, KernelRowsCarryMassBelowThreshold) {
    // Each row of the operator applied to 1 is P(Z < threshold - s).
    const auto law = pareto(-0.3);
    RenewalKernel k(*law, 6.0, 120);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k.nodes()));
    const Eigen::VectorXd rows = k.matrix() * ones;
    for (std::size_t i = 0; i < k.nodes(); ++i) {
        const double s = static_cast<double>(i) * k.h();
        EXPECT_NEAR(rows(static_cast<Eigen::Index>(i)), law->cdf(6.0 - s), 1e-12);
    }
}

TEST(Renewal, GaussianMeanFptMatchesTable) {
    const auto law = gaussian(-0.5);
    const std::pair<double, double> table[] = {{5, 930}, {6, 2551}, {7, 6950}, {8, 19020}};
    for (auto [g, expected] : table) {
        const auto sol = solve_mean_fpt(*law, g);
        EXPECT_NEAR(sol.law.mean_fpt, expected, 0.03 * expected) << "gamma=" << g;
        EXPECT_NEAR(sol.law.lambda_gamma * sol.law.mean_fpt, 1.0, 1e-12);
        EXPECT_LT(sol.residual, 1e-6);
    }
}

TEST(Renewal, ParetoMeanFptAgainstFrozenOracle) {
    const auto law = pareto(-0.5);
    const double table[] = {800, 1100, 1455, 1880};
    int i = 0;
    for (const auto& o : kParetoFptOracle) {
        const double solver = solve_mean_fpt(*law, o.gamma).law.mean_fpt;
        EXPECT_NEAR(solver, o.mean, 0.10 * o.mean) << "gamma=" << o.gamma;
        EXPECT_NEAR(o.mean, table[i], 0.10 * table[i]) << "gamma=" << o.gamma;
        ++i;
    }
}

TEST(Renewal, MeanFptAgainstLiveMonteCarlo) {
    for (const auto& law : {gaussian(-0.5), pareto(-0.5), make_law(moment_matched_spec(Family::Laplace, -0.5, 1.0))}) {
        const double g = 3.0;
        const auto mc = mean_fpt_monte_carlo(law, g, 40000, 17, 1);
        const double solver = solve_mean_fpt(*law, g).law.mean_fpt;
        EXPECT_NEAR(solver, mc.mean, std::max(3.0 * mc.ci / 1.96, 0.01 * mc.mean)) << law->describe();
    }
}

TEST(Renewal, MeanFptRejectsNonNegativeDrift) {
    EXPECT_THROW(solve_mean_fpt(*gaussian(0.0), 5.0), DivergenceError);
    EXPECT_THROW(solve_mean_fpt(*gaussian(0.2), 5.0), DivergenceError);
}

TEST(Renewal, MeanFptGrowsWithThreshold) {
    const auto law = make_law(moment_matched_spec(Family::Laplace, -0.3, 1.0));
    double prev = 0.0;
    for (double g = 1.0; g <= 10.0; g += 1.0) {
        const double m = solve_mean_fpt(*law, g).law.mean_fpt;
        EXPECT_GT(m, prev);
        prev = m;
    }
}

TEST(Renewal, SurvivalStartsAtOne) {
    const auto q = solve_fpt_survival(*gaussian(-0.3), 5.0, 10);
    ASSERT_EQ(q.size(), 11u);
    EXPECT_DOUBLE_EQ(q[0], 1.0);
    for (std::size_t n = 1; n < q.size(); ++n) {
        EXPECT_LE(q[n], q[n - 1] + 1e-15);
    }
}

TEST(Renewal, SurvivalOneStepAtTinyThreshold) {
    const auto law = gaussian(-0.3);
    const double p = 1.0 - law->cdf(0.0);
    const auto q = solve_fpt_survival(*law, 1e-7, 1);
    EXPECT_NEAR(q[1], 1.0 - p, 1e-6);
}

TEST(Renewal, SurvivalSumsToMean) {
    const auto law = gaussian(-0.5);
    const auto q = solve_fpt_survival(*law, 2.0, 4000);
    double sum = 0.0;
    for (double v : q) {
        sum += v;
    }
    const double mean = solve_mean_fpt(*law, 2.0).law.mean_fpt;
    EXPECT_NEAR(sum, mean, 0.01 * mean);
}

TEST(Renewal, LightOvershootStabilizes) {
    const auto law = gaussian(-0.3);
    const double r6 = solve_mean_overshoot(*law, 6.0).mean;
    const double r8 = solve_mean_overshoot(*law, 8.0).mean;
    EXPECT_NEAR(r6, r8, 0.02 * r8);
    const auto mc = simulate_overshoots(*law, 6.0, 40000, 3);
    double m = 0.0;
    for (double x : mc) {
        m += x;
    }
    m /= static_cast<double>(mc.size());
    EXPECT_NEAR(r6, m, 0.03 * m);
}

TEST(Renewal, ParetoOvershootAgainstFrozenOracle) {
    const double r = solve_mean_overshoot(*pareto(-0.3), 8.0).mean;
    EXPECT_NEAR(r, kParetoOvershootOracle, 0.10 * kParetoOvershootOracle);
}

TEST(Renewal, DeterministicOvershoot) {
    // +c steps from 0 reach 2.5c at 3c: overshoot c/2 on every path.
    const double c = 0.8;
    const auto ov = simulate_overshoots(*make_law(DistributionSpec::point_mass(c)), 2.5 * c, 100, 1);
    for (double x : ov) {
        EXPECT_NEAR(x, c / 2, 1e-12);
    }
    CusumDetector det(2.5 * c, 2.0 * c);
    det.step(c, 1);
    EXPECT_NEAR(*det.overshoot(), c / 2, 1e-12);
}

TEST(Renewal, OvershootLawModels) {
    const auto light = overshoot_law(*gaussian(-0.3), TailClass::Light, 8.0);
    EXPECT_EQ(light.model, OvershootLaw::Model::ExponentialFit);
    EXPECT_NEAR(light.ccdf(light.mean), std::exp(-1.0), 1e-12);

    const auto heavy = overshoot_law(*pareto(-0.3), TailClass::HeavySubexponential, 8.0, {}, {20000, 1});
    EXPECT_EQ(heavy.model, OvershootLaw::Model::Empirical);
    EXPECT_EQ(heavy.samples.size(), 20000u);

    // A constant increment has no spread to fit an exponential to.
    const auto degenerate = overshoot_law(*make_law(DistributionSpec::point_mass(0.8)), TailClass::Light, 2.0, {},
                                          {1000, 1});
    EXPECT_EQ(degenerate.model, OvershootLaw::Model::Empirical);
    EXPECT_NEAR(degenerate.mean, 0.4, 1e-12);
}

TEST(Renewal, LightOvershootIsNearlyExponential) {
    const auto law = gaussian(-0.3);
    const auto fit = overshoot_law(*law, TailClass::Light, 8.0);
    const auto mc = simulate_overshoots(*law, 8.0, 20000, 11);
    double sup = 0.0;
    for (std::size_t i = 0; i < mc.size(); ++i) {
        const double emp_hi = 1.0 - static_cast<double>(i) / static_cast<double>(mc.size());
        const double emp_lo = 1.0 - static_cast<double>(i + 1) / static_cast<double>(mc.size());
        const double model = fit.ccdf(mc[i]);
        sup = std::max({sup, std::abs(model - emp_hi), std::abs(model - emp_lo)});
    }
    EXPECT_LT(sup, 0.05);
}

TEST(Renewal, HeavyOvershootDominatesLight) {
    const auto light = simulate_overshoots(*gaussian(-0.3), 8.0, 10000, 5);
    const auto heavy = simulate_overshoots(*pareto(-0.3), 8.0, 10000, 5);
    for (double q : {0.5, 0.9, 0.99}) {
        const auto idx = static_cast<std::size_t>(q * 10000);
        EXPECT_GT(heavy[idx], light[idx]) << "quantile " << q;
    }
}

TEST(Renewal, InfiniteMeanIncrementRejected) {
    // E[Z^+] = inf forces E[Z] = +inf, so the drift check fires first.
    const auto law = make_law(DistributionSpec::pareto(0.9, 1.0).affine(1.0, -30.0));
    EXPECT_THROW(solve_mean_overshoot(*law, 5.0), DivergenceError);
}
