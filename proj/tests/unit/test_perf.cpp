#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "dualcusum/cusum.hpp"
#include "dualcusum/errors.hpp"
#include "dualcusum/perf.hpp"
#include "dualcusum/sim.hpp"

using namespace dualcusum;

namespace {

DelayInputs table4_inputs(double gamma) {
    DelayInputs in;
    in.drift = 0.3;
    in.variance = 1.0;
    in.sensors = 10;
    in.gamma = gamma;
    in.beta = gamma;
    NetworkConfig cfg;
    cfg.sensors = 10;
    cfg.I = 1.0;
    cfg.b = 1.0;
    in.fusion_drifts = fusion_drifts(cfg);
    return in;
}

}  // namespace

TEST(Pfa, NoAlarmMechanismGivesZero) {
    EXPECT_EQ(pfa_geometric({0.0, 0.0, 0.0, 5, 0.005}), 0.0);
    EXPECT_EQ(pfa_geometric({1e-3, 0.0, 0.0, 5, 0.005}), 0.0);
}

TEST(Pfa, MatchesDirectFormula) {
    const FalseAlarmInputs in{2e-4, 1e-6, 0.05, 5, 0.01};
    const double r = in.lambda0 + in.lambda_gamma * in.sensors * in.ptilde;
    const double direct = 1.0 - std::exp(-r) * in.rho / (1.0 - std::exp(-r) * (1.0 - in.rho));
    EXPECT_NEAR(pfa_geometric(in), direct, 1e-12);
}

TEST(Pfa, Monotonicity) {
    Rng rng = make_stream(8, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        FalseAlarmInputs in{1e-5 + 1e-3 * u(rng), 1e-7 + 1e-4 * u(rng), 0.01 + 0.9 * u(rng),
                            1 + static_cast<int>(9 * u(rng)), 1e-4 + 0.5 * u(rng)};
        const double base = pfa_geometric(in);
        auto bumped = [&](auto f) {
            auto c = in;
            f(c);
            return pfa_geometric(c);
        };
        EXPECT_GT(bumped([](auto& c) { c.lambda0 *= 1.1; }), base);
        EXPECT_GT(bumped([](auto& c) { c.lambda_gamma *= 1.1; }), base);
        EXPECT_GT(bumped([](auto& c) { c.ptilde = std::min(1.0, c.ptilde * 1.05); }), base);
        EXPECT_GT(bumped([](auto& c) { c.sensors += 1; }), base);
        EXPECT_LT(bumped([](auto& c) { c.rho *= 1.1; }), base);
    }
}

TEST(Pfa, InvalidInputs) {
    EXPECT_THROW(pfa_geometric({-1.0, 0.0, 0.1, 5, 0.1}), ConfigError);
    EXPECT_THROW(pfa_geometric({1.0, 0.0, 1.5, 5, 0.1}), ConfigError);
    EXPECT_THROW(pfa_geometric({1.0, 0.0, 0.1, 5, 1.0}), ConfigError);
}

TEST(Ptilde, LightLimits) {
    NetworkConfig cfg;
    const auto one = fusion_increment_law(cfg, 1);
    const auto batch = batch_law_light(1.2, -0.3, 1.0);
    EXPECT_LT(ptilde_light(batch, *one, 1000.0), 1e-12);
    BatchLaw none;
    none.cdf = {1.0};
    EXPECT_EQ(ptilde_light(none, *one, 18.0), 0.0);
    BatchLaw short_horizon;
    short_horizon.cdf = {0.0, 0.5};
    EXPECT_THROW(ptilde_light(short_horizon, *one, 18.0), PrecisionError);
}

TEST(Ptilde, LightAgainstDirectSimulation) {
    // P(tau_beta <= eta) sampled directly: eta from the batch law, then the
    // one-sender fusion walk for eta slots.
    NetworkConfig cfg;
    const auto one = fusion_increment_law(cfg, 1);
    const auto batch = batch_law_light(1.2, -0.3, 1.0);
    const double beta = 6.0;
    const double analytic = ptilde_light(batch, *one, beta);
    Rng rng = make_stream(77, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 200000;
    int hits = 0;
    for (int r = 0; r < n; ++r) {
        const double v = u(rng);
        std::size_t eta = 1;
        while (eta < batch.horizon() && batch.cdf[eta] < v) {
            ++eta;
        }
        CusumDetector det(beta);
        for (std::size_t k = 1; k <= eta && !det.crossed(); ++k) {
            det.step(one->sample(rng), static_cast<std::int64_t>(k));
        }
        hits += det.crossed() ? 1 : 0;
    }
    const double p = static_cast<double>(hits) / n;
    EXPECT_NEAR(analytic, p, 4.0 * std::sqrt(p * (1 - p) / n) + 0.02 * p);
}

TEST(Ptilde, HeavyLimits) {
    const auto batch = batch_law_from_samples({1, 3, 5, 8, 20, 40, 90, 200});
    const FptLaw fpt{1e-4, 1e4, {}};
    const auto ex = exceedance_model(5, fpt, batch);
    // m* = 1 with mu_1 = 1 and beta = 8: p = P(eta >= 8).
    const std::vector<double> drifts{-1.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    EXPECT_DOUBLE_EQ(ptilde_heavy(batch, drifts, 1, 8.0, ex), batch.ccdf(7));
    EXPECT_DOUBLE_EQ(ptilde_heavy(batch, drifts, 1, 8.0, ex), 5.0 / 8.0);
    EXPECT_EQ(ptilde_heavy(batch, drifts, 1, 1e6, ex), 0.0);
    EXPECT_EQ(ptilde_heavy(batch, drifts, 2, 1e6, ex), 0.0);
    EXPECT_THROW(ptilde_heavy(batch, drifts, 6, 8.0, ex), ConfigError);
}

TEST(Ptilde, HeavyIncreasesWithBatchRate) {
    const auto batch = batch_law_from_samples({1, 3, 5, 8, 20, 40, 90, 200, 400, 800});
    const std::vector<double> drifts{-3.0, -1.0, 0.5, 2.0, 3.5, 5.0};
    double prev = 0.0;
    for (double rate : {1e-5, 1e-4, 1e-3}) {
        const auto ex = exceedance_model(5, FptLaw{rate, 1.0 / rate, {}}, batch);
        const double p = ptilde_heavy(batch, drifts, 2, 10.0, ex);
        EXPECT_GT(p, prev);
        EXPECT_LE(p, batch.ccdf(19));
        prev = p;
    }
}

TEST(Lambda0, LargeThresholdIsRare) {
    NetworkConfig cfg;
    cfg.I = 2.0;
    cfg.b = 1.0;
    const auto none = fusion_increment_law(cfg, 0);
    EXPECT_LT(lambda0(*none, 18.0), 1e-6);
}

TEST(Lambda0, AgainstMonteCarlo) {
    NetworkConfig cfg;
    cfg.I = 1.0;
    const auto none = fusion_increment_law(cfg, 0);
    const double rate = lambda0(*none, 3.0);
    const auto mc = mean_fpt_monte_carlo(none, 3.0, 20000, 12, 1);
    EXPECT_NEAR(1.0 / rate, mc.mean, 3.0 * mc.ci / 1.96 + 0.01 * mc.mean);
}

TEST(Lambda0, TinyThresholdIsOneStepCrossing) {
    NetworkConfig cfg;
    const auto none = fusion_increment_law(cfg, 0);
    const double p = 1.0 - none->cdf(0.0);
    EXPECT_NEAR(lambda0(*none, 1e-7), p, 1e-4 * p);
}

TEST(Lambda0, DecreasesWithThreshold) {
    NetworkConfig cfg;
    cfg.I = 1.0;
    const auto none = fusion_increment_law(cfg, 0);
    double prev = 1.0;
    for (double beta : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double r = lambda0(*none, beta);
        EXPECT_LT(r, prev);
        prev = r;
    }
    EXPECT_EQ(lambda0(*make_law(DistributionSpec::point_mass(-1.0)), 5.0), 0.0);
}

TEST(Delay, MeanMinFpt) {
    EXPECT_NEAR(mean_min_fpt(1, 15.0, 0.3, 1.0), 15.0 / 0.3, 1.0);
    EXPECT_LT(mean_min_fpt(5, 15.0, 0.3, 1.0), mean_min_fpt(2, 15.0, 0.3, 1.0));
    EXPECT_EQ(mean_min_fpt(3, 0.0, 0.3, 1.0), 0.0);
    EXPECT_THROW(mean_min_fpt(3, 5.0, 0.0, 1.0), ModelViolationError);
    EXPECT_THROW(mean_min_fpt(0, 5.0, 0.3, 1.0), ConfigError);
}

TEST(Delay, FusionDriftsGaussianClosedForm) {
    NetworkConfig cfg;
    cfg.sensors = 4;
    cfg.b = 0.5;
    cfg.I = 3.0;
    const auto d = fusion_drifts(cfg);
    ASSERT_EQ(d.size(), 5u);
    const double s = 1.5;
    for (std::size_t l = 0; l < d.size(); ++l) {
        EXPECT_NEAR(d[l], s * static_cast<double>(l) * 0.5 - s * s / 2, 1e-12);
    }
    EXPECT_EQ(minimum_senders(d), 2);
    cfg.fusion_kind = FusionKind::Nonparametric;
    cfg.fusion_D = 0.7;
    const auto np = fusion_drifts(cfg);
    EXPECT_NEAR(np[2], 1.0 - 0.7, 1e-12);
}

TEST(Delay, Table4Recursion) {
    const std::pair<double, double> table[] = {{5, 5.3}, {8, 11.4}, {15, 30.3}, {50, 146.7}};
    for (auto [g, expected] : table) {
        EXPECT_NEAR(edd_approx(table4_inputs(g)), expected, 0.03 * expected) << "gamma=" << g;
    }
}

TEST(Delay, BreakdownInvariants) {
    const auto b = edd_breakdown(table4_inputs(15.0));
    ASSERT_EQ(b.epochs.size(), 10u);
    for (std::size_t i = 1; i < b.epochs.size(); ++i) {
        EXPECT_GE(b.epochs[i], b.epochs[i - 1]);
    }
    EXPECT_DOUBLE_EQ(b.levels[9], 15.0);
    EXPECT_GE(b.j, 1);
    EXPECT_GE(b.edd, b.epochs[static_cast<std::size_t>(b.j - 1)]);
}

TEST(Delay, TinyBetaAlarmsAtFirstTransmission) {
    auto in = table4_inputs(15.0);
    in.beta = 1e-9;
    EXPECT_NEAR(edd_approx(in), mean_min_fpt(10, 15.0, 0.3, 1.0), 1e-6);
}

TEST(Delay, UnreachableIsInfeasible) {
    auto in = table4_inputs(15.0);
    in.fusion_drifts.assign(11, -1.0);
    EXPECT_THROW(edd_approx(in), InfeasibleError);
}

TEST(Delay, IndependentOfIncrementFamily) {
    AnalyticModel model;
    std::vector<double> edds;
    for (auto f : {Family::Gaussian, Family::Laplace, Family::Lognormal, Family::Pareto}) {
        NetworkConfig cfg;
        cfg.sensors = 10;
        cfg.I = 1.0;
        cfg.gamma = 15.0;
        cfg.beta = 15.0;
        const std::optional<double> shape = f == Family::Pareto ? std::optional<double>(3.0) : std::nullopt;
        cfg.pre = moment_matched_spec(f, -0.3, 1.0, shape);
        cfg.post = cfg.pre.shifted(0.6);
        edds.push_back(edd_approx(model.delay_inputs(cfg)));
    }
    for (double e : edds) {
        EXPECT_NEAR(e, edds.front(), 1e-9);
    }
}

TEST(Energy, HandComputed) {
    DelayBreakdown d;
    d.edd = 20.0;
    d.epochs = {5.0, 10.0, 30.0};
    // pre: 1e-3 * 4 * 1000 = 4; post: (15 + 10 + 0) / 3.
    EXPECT_NEAR(analytic_energy(0.5, 1e-3, 4.0, 1000.0, d), 0.25 * (4.0 + 25.0 / 3.0), 1e-12);
}

TEST(Analytic, ReportIsConsistentWithComponents) {
    NetworkConfig cfg;  // Gaussian L=5, I=2, gamma=15, beta=18
    AnalyticModel model;
    const auto r = model.evaluate(cfg);
    EXPECT_EQ(r.method, PerfReport::Method::Analytical);
    EXPECT_NEAR(r.pfa, pfa_geometric({r.lambda_gamma, r.lambda0, r.ptilde, cfg.sensors, cfg.rho}), 1e-15);
    EXPECT_GT(r.ptilde, 0.0);
    EXPECT_LT(r.ptilde, 1.0);
    EXPECT_TRUE(std::isfinite(r.edd));
    EXPECT_GT(r.energy, 0.0);
    EXPECT_EQ(r.config_hash, cfg.hash());
}

TEST(Analytic, ReportSerialization) {
    NetworkConfig cfg;
    const auto r = analyze(cfg);
    const auto header = PerfReport::csv_header();
    const auto row = r.csv_row();
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
    const auto j = nlohmann::json::parse(r.to_json());
    EXPECT_EQ(j.at("method"), "analytical");
    EXPECT_EQ(j.at("config_hash"), cfg.hash());
    EXPECT_NEAR(j.at("pfa").get<double>(), r.pfa, 1e-12 * r.pfa);
}
