#include "dualcusum/batch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dualcusum/detail/normal.hpp"
#include "dualcusum/errors.hpp"
#include "dualcusum/excursion.hpp"

namespace dualcusum {

namespace {

using detail::normal_cdf;
using detail::normal_pdf;
using detail::normal_sf;

constexpr double kDefaultTail = 1e-4;
constexpr std::size_t kMaxHorizon = 200000;

double integrate(auto&& f, double lo, double hi) {
    if (!(hi > lo)) {
        return 0.0;
    }
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 12, 1e-10);
}

// Occupation time above the start level for unit variance and drift -a:
// P(A > t) = 2(1 + a^2 t) Phi(-a sqrt t) - 2 a sqrt(t) phi(a sqrt t).
double occupation_cdf_unit(double t, double a) {
    if (t <= 0) {
        return 0.0;
    }
    const double r = a * std::sqrt(t);
    const double survival = 2.0 * (1.0 + r * r) * normal_sf(r) - 2.0 * r * normal_pdf(r);
    return std::clamp(1.0 - survival, 0.0, 1.0);
}

// Mills ratio Phi(-x)/phi(x) for x >= 0.
double mills_ratio(double x) {
    if (x < 3.0) {
        return normal_sf(x) / normal_pdf(x);
    }
    // Continued fraction 1/(x + 1/(x + 2/(x + 3/(x + ...)))), evaluated bottom up.
    double tail = x;
    for (int k = 60; k >= 1; --k) {
        tail = x + k / tail;
    }
    return 1.0 / tail;
}

// Density of the first passage time down by x, with x ~ Exp(mean g), for unit
// variance and drift -a. Closed form of the exponential mixture of inverse
// Gaussian densities:
//   c(u) = exp(-a^2 u/2) / (g sqrt(2 pi u)) * [1 + z Phi(z)/phi(z)],  z = sqrt(u)(a - 1/g).
double mixed_passage_density(double u, double a, double g) {
    if (u <= 0) {
        return 0.0;
    }
    const double z = std::sqrt(u) * (a - 1.0 / g);
    const double lead = 1.0 / (g * std::sqrt(2.0 * std::numbers::pi * u));
    if (z <= 0) {
        const double bracket = 1.0 - (-z) * mills_ratio(-z);
        return lead * std::exp(-0.5 * a * a * u) * std::max(0.0, bracket);
    }
    // z > 0 only when g > 1/a; combine exponents to avoid overflow.
    const double decay = std::exp(0.5 * u * (1.0 / (g * g) - 2.0 * a / g));
    return lead * (std::exp(-0.5 * a * a * u) + z * normal_cdf(z) * std::sqrt(2.0 * std::numbers::pi) * decay);
}

double inverse_gaussian_density(double h, double x, double a) {
    if (h <= 0) {
        return 0.0;
    }
    const double d = x - a * h;
    return x / std::sqrt(2.0 * std::numbers::pi * h * h * h) * std::exp(-d * d / (2.0 * h));
}

void require_negative_drift(double drift, double variance) {
    if (!(drift < 0)) {
        throw ModelViolationError("batch approximation requires negative drift");
    }
    if (!(variance > 0)) {
        throw ModelViolationError("batch approximation requires positive variance");
    }
}

void finish_moments(BatchLaw& law) {
    double m = 0.0;
    for (std::size_t j = 0; j < law.cdf.size(); ++j) {
        m += 1.0 - law.cdf[j];
    }
    law.mean = m;
}

}  // namespace

double BatchLaw::pmf(std::size_t j) const {
    if (j == 0 || j >= cdf.size()) {
        return 0.0;
    }
    return std::max(0.0, cdf[j] - cdf[j - 1]);
}

double BatchLaw::ccdf(std::size_t j) const {
    if (cdf.empty()) {
        return 1.0;
    }
    return 1.0 - cdf[std::min(j, cdf.size() - 1)];
}

double level_occupation_cdf(double t, double drift, double variance) {
    require_negative_drift(drift, variance);
    // Time change: drift mu, variance s^2 has the occupation law of unit
    // variance with drift mu/s.
    return occupation_cdf_unit(t, -drift / std::sqrt(variance));
}

double conditional_batch_cdf(double j, double x, double drift, double variance) {
    require_negative_drift(drift, variance);
    if (j <= 0) {
        return 0.0;
    }
    const double sd = std::sqrt(variance);
    const double a = -drift / sd;
    const double xs = std::max(0.0, x) / sd;
    if (xs == 0.0) {
        return occupation_cdf_unit(j, a);
    }
    // Substitute h = v^2 to tame the spike of the passage density near 0.
    auto integrand = [&](double v) {
        const double h = v * v;
        return occupation_cdf_unit(j - h, a) * inverse_gaussian_density(h, xs, a) * 2.0 * v;
    };
    return std::clamp(integrate(integrand, 0.0, std::sqrt(j)), 0.0, 1.0);
}

BatchLaw batch_law_light(double mean_overshoot, double drift, double variance,
                         std::optional<std::size_t> horizon) {
    require_negative_drift(drift, variance);
    if (!(mean_overshoot >= 0) || !std::isfinite(mean_overshoot)) {
        throw ConfigError("mean overshoot must be finite and >= 0");
    }
    const double sd = std::sqrt(variance);
    const double a = -drift / sd;
    const double g = mean_overshoot / sd;

    auto cdf_at = [&](double t) {
        if (g <= 1e-12) {
            return occupation_cdf_unit(t, a);
        }
        auto integrand = [&](double v) {
            const double u = v * v;
            return occupation_cdf_unit(t - u, a) * mixed_passage_density(u, a, g) * 2.0 * v;
        };
        return std::clamp(integrate(integrand, 0.0, std::sqrt(t)), 0.0, 1.0);
    };

    BatchLaw law;
    law.construction = BatchLaw::Construction::BrownianMixed;
    law.cdf.push_back(0.0);
    const std::size_t cap = horizon.value_or(kMaxHorizon);
    for (std::size_t j = 1; j <= cap; ++j) {
        const double c = std::max(law.cdf.back(), cdf_at(static_cast<double>(j)));
        law.cdf.push_back(c);
        if (!horizon && 1.0 - c < kDefaultTail) {
            break;
        }
    }
    finish_moments(law);
    return law;
}

BatchLaw batch_law_from_samples(const std::vector<std::int64_t>& sizes, std::optional<std::size_t> horizon) {
    if (sizes.empty()) {
        throw PrecisionError("no batch samples");
    }
    const auto max_size = static_cast<std::size_t>(*std::max_element(sizes.begin(), sizes.end()));
    const std::size_t n_h = horizon.value_or(max_size);
    std::vector<double> counts(n_h + 1, 0.0);
    for (auto s : sizes) {
        if (s < 1) {
            throw InputError("batch sizes must be >= 1");
        }
        const auto idx = static_cast<std::size_t>(s);
        if (idx <= n_h) {
            counts[idx] += 1.0;
        }
    }
    const double n = static_cast<double>(sizes.size());
    BatchLaw law;
    law.construction = BatchLaw::Construction::MonteCarlo;
    law.samples = sizes.size();
    law.cdf.assign(n_h + 1, 0.0);
    law.ci_halfwidth.assign(n_h + 1, 0.0);
    double acc = 0.0;
    for (std::size_t j = 1; j <= n_h; ++j) {
        acc += counts[j];
        law.cdf[j] = acc / n;
    }
    for (std::size_t j = 0; j <= n_h; ++j) {
        const double p = 1.0 - law.cdf[j];
        law.ci_halfwidth[j] = 1.96 * std::sqrt(p * (1.0 - p) / n);
    }
    double m = 0.0;
    for (auto s : sizes) {
        m += static_cast<double>(s);
    }
    law.mean = m / n;
    return law;
}

BatchLaw batch_law_heavy(const IncrementLaw& law, double gamma, std::optional<std::size_t> horizon,
                         std::size_t replications, std::uint64_t seed) {
    if (!(law.mean() < 0)) {
        throw ModelViolationError("batch simulation requires negative drift");
    }
    if (replications < 1000) {
        throw PrecisionError("batch law needs at least 1000 excursions");
    }
    IncrementLawPtr borrowed(std::shared_ptr<const IncrementLaw>{}, &law);
    ExcursionSampler sampler(borrowed, gamma);
    Rng rng = make_stream(seed, 0xba7c);
    std::vector<std::int64_t> sizes;
    sizes.reserve(replications);
    for (std::size_t i = 0; i < replications; ++i) {
        sizes.push_back(sampler.next(rng).batch);
    }
    return batch_law_from_samples(sizes, horizon);
}

ExceedanceModel exceedance_model(int sensors, const FptLaw& fpt, BatchLaw batch) {
    if (sensors < 1) {
        throw ConfigError("exceedance model needs at least one sensor");
    }
    ExceedanceModel m;
    m.lambda_gamma = fpt.lambda_gamma;
    m.batch = std::move(batch);
    m.sensors = sensors;
    m.pooled_rate = static_cast<double>(sensors) * fpt.lambda_gamma;
    return m;
}

}  // namespace dualcusum
