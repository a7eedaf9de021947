#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dualcusum/batch.hpp"
#include "dualcusum/cusum.hpp"
#include "dualcusum/errors.hpp"
#include "dualcusum/renewal.hpp"
#include "dualcusum/sim.hpp"

using namespace dualcusum;

namespace {

IncrementLawPtr matched(Family f, double m, std::optional<double> shape = std::nullopt) {
    return make_law(moment_matched_spec(f, m, 1.0, shape));
}

// sup_j |model P(eta <= j) - empirical P(eta <= j)|
double sup_distance(const BatchLaw& model, const std::vector<Excursion>& ex) {
    std::vector<std::int64_t> sizes;
    for (const auto& e : ex) {
        sizes.push_back(e.batch);
    }
    const auto emp = batch_law_from_samples(sizes);
    double sup = 0.0;
    const std::size_t top = std::max(model.horizon(), emp.horizon());
    for (std::size_t j = 0; j <= top; ++j) {
        const double a = j <= model.horizon() ? model.cdf[j] : 1.0;
        const double b = j <= emp.horizon() ? emp.cdf[j] : 1.0;
        sup = std::max(sup, std::abs(a - b));
    }
    return sup;
}

}  // namespace

TEST(Batch, LevelOccupationMean) {
    // Mean occupation time above the start level is variance / (2 drift^2).
    for (auto [mu, var] : {std::pair{0.3, 1.0}, std::pair{0.5, 2.0}, std::pair{1.0, 0.5}}) {
        const double expected = var / (2 * mu * mu);
        const double dt = expected / 2000.0;
        double integral = 0.0;
        for (double t = 0.5 * dt; t < 400 * expected; t += dt) {
            integral += (1.0 - level_occupation_cdf(t, -mu, var)) * dt;
        }
        EXPECT_NEAR(integral, expected, 1e-3 * expected);
    }
}

TEST(Batch, ConditionalCdfProperties) {
    for (double j : {1.0, 4.0, 20.0}) {
        EXPECT_NEAR(conditional_batch_cdf(j, 0.0, -0.3, 1.0), level_occupation_cdf(j, -0.3, 1.0), 1e-9);
        double prev = 1.0;
        for (double x : {0.0, 0.5, 1.0, 2.0, 4.0}) {
            const double g = conditional_batch_cdf(j, x, -0.3, 1.0);
            EXPECT_LE(g, prev + 1e-12);
            EXPECT_GE(g, 0.0);
            prev = g;
        }
    }
    EXPECT_NEAR(conditional_batch_cdf(1e6, 2.0, -0.3, 1.0), 1.0, 1e-9);
}

TEST(Batch, LightLawIsADistribution) {
    const auto law = batch_law_light(1.2, -0.3, 1.0);
    EXPECT_EQ(law.construction, BatchLaw::Construction::BrownianMixed);
    EXPECT_EQ(law.cdf[0], 0.0);
    for (std::size_t j = 1; j <= law.horizon(); ++j) {
        EXPECT_GE(law.cdf[j], law.cdf[j - 1]);
    }
    EXPECT_LT(law.tail_remainder(), 1e-4);
    EXPECT_GT(law.mean, 1.0);
    double pmf_sum = 0.0;
    for (std::size_t j = 1; j <= law.horizon(); ++j) {
        pmf_sum += law.pmf(j);
    }
    EXPECT_NEAR(pmf_sum + law.tail_remainder(), 1.0, 1e-12);
}

TEST(Batch, LightLawRejectsNonNegativeDrift) {
    EXPECT_THROW(batch_law_light(1.0, 0.0, 1.0), ModelViolationError);
    EXPECT_THROW(batch_law_light(1.0, 0.2, 1.0), ModelViolationError);
}

TEST(Batch, LargerOvershootGivesLargerBatches) {
    const auto small = batch_law_light(0.5, -0.3, 1.0, 200);
    const auto large = batch_law_light(2.0, -0.3, 1.0, 200);
    for (std::size_t j = 1; j <= 200; ++j) {
        EXPECT_GE(small.cdf[j], large.cdf[j] - 1e-12);
    }
}

TEST(Batch, LightLawMatchesSimulation) {
    for (Family f : {Family::Gaussian, Family::Laplace}) {
        const auto law = matched(f, -0.3);
        const double gamma = 6.0;
        const double overshoot = solve_mean_overshoot(*law, gamma).mean;
        const auto model = batch_law_light(overshoot, law->mean(), law->variance());
        const auto ex = measure_excursions(law, gamma, 20000, 9);
        EXPECT_LT(sup_distance(model, ex), 0.07) << to_string(f);
    }
}

TEST(Batch, EmpiricalMeanMatchesSimulatedExcursions) {
    const auto law = matched(Family::Gaussian, -0.3);
    const auto ex = measure_excursions(law, 6.0, 20000, 21);
    std::vector<std::int64_t> sizes;
    double total = 0.0;
    for (const auto& e : ex) {
        sizes.push_back(e.batch);
        total += static_cast<double>(e.batch);
        EXPECT_GE(e.batch, 1);
    }
    const auto emp = batch_law_from_samples(sizes);
    EXPECT_NEAR(emp.mean, total / static_cast<double>(ex.size()), 1e-9);
    const auto heavy_path = batch_law_heavy(*law, 6.0, std::nullopt, 20000, 33);
    EXPECT_EQ(heavy_path.construction, BatchLaw::Construction::MonteCarlo);
    // Two independent 2e4-excursion estimates of E[eta] agree to a few percent.
    EXPECT_NEAR(heavy_path.mean, emp.mean, 0.05 * emp.mean);
}

TEST(Batch, ParetoBatchesHeavierThanLaplace) {
    const auto pareto = batch_law_heavy(*matched(Family::Pareto, -0.3, 2.1), 15.0, std::nullopt, 20000, 3);
    const auto laplace = batch_law_heavy(*matched(Family::Laplace, -0.3), 15.0, std::nullopt, 5000, 3);
    EXPECT_GT(pareto.ccdf(10), 2.0 * laplace.ccdf(10));
}

TEST(Batch, HeavyLawNeedsEnoughExcursions) {
    EXPECT_THROW(batch_law_heavy(*matched(Family::Pareto, -0.3, 2.1), 5.0, std::nullopt, 999, 1), PrecisionError);
}

TEST(Batch, ForcedCrossingWithUnitDownStep) {
    // Started at the threshold with Z = -1 and gamma = 1, the walk is above
    // the level for the crossing slot only.
    CusumDetector det(1.0, 1.0);
    std::int64_t eta = det.state() >= det.threshold() ? 1 : 0;
    for (std::int64_t k = 1; det.state() > 0; ++k) {
        det.step(-1.0, k);
        eta += det.state() >= det.threshold() ? 1 : 0;
    }
    EXPECT_EQ(eta, 1);
    const auto law = batch_law_from_samples({1, 1, 1, 1});
    EXPECT_DOUBLE_EQ(law.cdf[1], 1.0);
    EXPECT_DOUBLE_EQ(law.mean, 1.0);
}

TEST(Batch, FromSamplesAccounting) {
    const auto law = batch_law_from_samples({1, 2, 2, 5});
    EXPECT_EQ(law.horizon(), 5u);
    EXPECT_DOUBLE_EQ(law.pmf(2), 0.5);
    EXPECT_DOUBLE_EQ(law.ccdf(2), 0.25);
    EXPECT_DOUBLE_EQ(law.mean, 2.5);
    EXPECT_DOUBLE_EQ(law.tail_remainder(), 0.0);
    const auto cut = batch_law_from_samples({1, 2, 2, 5}, 3);
    EXPECT_DOUBLE_EQ(cut.tail_remainder(), 0.25);
}

TEST(Batch, PooledRate) {
    FptLaw one{1.0 / 930.0, 930.0, {}};
    EXPECT_DOUBLE_EQ(exceedance_model(1, one, BatchLaw{}).pooled_rate, 1.0 / 930.0);
    FptLaw fpt{1.0 / 2551.0, 2551.0, {}};
    const auto m = exceedance_model(10, fpt, BatchLaw{});
    EXPECT_NEAR(m.pooled_rate, 3.92e-3, 0.005 * 3.92e-3);
    EXPECT_NEAR(m.mean_batches(1000.0), 3.92, 0.02);
}

TEST(Batch, PooledGapsAreExponential) {
    const auto law = matched(Family::Gaussian, -0.5);
    auto gaps = pooled_batch_gaps(law, 5.0, 10, 2'000'000, 4);
    ASSERT_GT(gaps.size(), 5000u);
    double mean = 0.0;
    for (double g : gaps) {
        mean += g;
    }
    mean /= static_cast<double>(gaps.size());
    double var = 0.0;
    for (double g : gaps) {
        var += (g - mean) * (g - mean);
    }
    var /= static_cast<double>(gaps.size() - 1);
    EXPECT_NEAR(std::sqrt(var) / mean, 1.0, 0.05);

    // Kolmogorov distance to the exponential with the fitted mean.
    std::sort(gaps.begin(), gaps.end());
    const double n = static_cast<double>(gaps.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        const double f = 1.0 - std::exp(-gaps[i] / mean);
        ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    EXPECT_LT(ks, 0.03);
    // Pooled rate agrees with L / E[tau_gamma].
    const double lambda = solve_mean_fpt(*law, 5.0).law.lambda_gamma;
    EXPECT_NEAR(1.0 / mean, 10 * lambda, 0.1 * 10 * lambda);
}
