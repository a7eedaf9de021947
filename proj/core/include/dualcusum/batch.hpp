#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dualcusum/dist.hpp"
#include "dualcusum/renewal.hpp"

namespace dualcusum {

/// Law of the batch size eta >= 1 on {1..horizon}.
struct BatchLaw {
    enum class Construction { BrownianMixed, MonteCarlo };

    Construction construction = Construction::BrownianMixed;
    std::vector<double> cdf;           // cdf[j] = P(eta <= j), j = 0..horizon, cdf[0] = 0
    std::vector<double> ci_halfwidth;  // 95% half-width of ccdf(j), Monte Carlo only
    double mean = 0.0;
    std::size_t samples = 0;  // Monte Carlo only

    std::size_t horizon() const { return cdf.empty() ? 0 : cdf.size() - 1; }
    double pmf(std::size_t j) const;
    /// P(eta > j); 0 beyond the horizon is not assumed, the tail remainder is returned.
    double ccdf(std::size_t j) const;
    /// Probability mass beyond the horizon, 1 - cdf[horizon].
    double tail_remainder() const { return cdf.empty() ? 1.0 : 1.0 - cdf.back(); }
};

/// CDF of the total time a Brownian motion with drift `drift` < 0 and
/// variance `variance` per slot spends above its starting level.
double level_occupation_cdf(double t, double drift, double variance);

/// G_j(x): Brownian approximation of P(eta <= j | overshoot x). The walk is
/// replaced by a Brownian motion started x above the threshold; eta is the
/// total time it spends above the threshold, i.e. the first passage down to
/// the threshold plus the occupation time above it after that (re-entries
/// included).
double conditional_batch_cdf(double j, double x, double drift, double variance);

/// P(eta <= j) = integral_0^inf G_j(x) exp(-x/EG)/EG dx, for j = 0..horizon.
/// The horizon defaults to the first j with P(eta > j) < 1e-4.
/// Throws ModelViolationError for drift >= 0.
BatchLaw batch_law_light(double mean_overshoot, double drift, double variance,
                         std::optional<std::size_t> horizon = std::nullopt);

/// Empirical batch law from `replications` simulated excursions above gamma.
/// Throws PrecisionError for fewer than 1000 excursions.
BatchLaw batch_law_heavy(const IncrementLaw& law, double gamma,
                         std::optional<std::size_t> horizon = std::nullopt,
                         std::size_t replications = 20000, std::uint64_t seed = 1);

/// Empirical law from raw batch sizes. The horizon defaults to the largest
/// observed size so the whole tail is kept.
BatchLaw batch_law_from_samples(const std::vector<std::int64_t>& sizes,
                                std::optional<std::size_t> horizon = std::nullopt);

/// Pooled compound Poisson description of the exceedances of L sensors.
struct ExceedanceModel {
    double lambda_gamma = 0.0;  // per-sensor batch rate
    BatchLaw batch;
    int sensors = 1;
    double pooled_rate = 0.0;  // sensors * lambda_gamma

    double mean_batches(double slots) const { return pooled_rate * slots; }
};

ExceedanceModel exceedance_model(int sensors, const FptLaw& fpt, BatchLaw batch);

}  // namespace dualcusum
