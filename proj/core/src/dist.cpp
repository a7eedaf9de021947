#include "dualcusum/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "dualcusum/detail/normal.hpp"
#include "dualcusum/errors.hpp"

namespace dualcusum {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using detail::normal_cdf;
using detail::normal_pdf;
using detail::normal_sf;

// ---------------------------------------------------------------------------
// Base-family primitives (affine part excluded).

double base_cdf(const DistributionSpec& s, double x) {
    switch (s.family) {
    case Family::Gaussian:
        return normal_cdf((x - s.p1) / std::sqrt(s.p2));
    case Family::Laplace: {
        const double d = (x - s.p1) / s.p2;
        return d < 0 ? 0.5 * std::exp(d) : 1.0 - 0.5 * std::exp(-d);
    }
    case Family::Exponential:
        return x <= 0 ? 0.0 : -std::expm1(-s.p1 * x);
    case Family::Pareto:
        return x < s.p2 ? 0.0 : 1.0 - std::pow(s.p2 / x, s.p1);
    case Family::Lognormal:
        return x <= 0 ? 0.0 : normal_cdf((std::log(x) - s.p1) / s.p2);
    case Family::PointMass:
        return x >= s.p1 ? 1.0 : 0.0;
    }
    throw ConfigError("unsupported distribution family");
}

double base_log_density(const DistributionSpec& s, double x) {
    switch (s.family) {
    case Family::Gaussian: {
        const double u = x - s.p1;
        return -0.5 * u * u / s.p2 - 0.5 * std::log(2.0 * std::numbers::pi * s.p2);
    }
    case Family::Laplace:
        return -std::abs(x - s.p1) / s.p2 - std::log(2.0 * s.p2);
    case Family::Exponential:
        return x < 0 ? -kInf : std::log(s.p1) - s.p1 * x;
    case Family::Pareto:
        return x < s.p2 ? -kInf : std::log(s.p1) + s.p1 * std::log(s.p2) - (s.p1 + 1.0) * std::log(x);
    case Family::Lognormal: {
        if (x <= 0) {
            return -kInf;
        }
        const double u = (std::log(x) - s.p1) / s.p2;
        return -0.5 * u * u - std::log(x * s.p2 * std::sqrt(2.0 * std::numbers::pi));
    }
    case Family::PointMass:
        // Treated as a unit atom; densities are not meaningful here.
        return x == s.p1 ? 0.0 : -kInf;
    }
    throw ConfigError("unsupported distribution family");
}

double base_mean(const DistributionSpec& s) {
    switch (s.family) {
    case Family::Gaussian:
    case Family::Laplace:
    case Family::PointMass:
        return s.p1;
    case Family::Exponential:
        return 1.0 / s.p1;
    case Family::Pareto:
        return s.p1 > 1 ? s.p1 * s.p2 / (s.p1 - 1.0) : kInf;
    case Family::Lognormal:
        return std::exp(s.p1 + 0.5 * s.p2 * s.p2);
    }
    throw ConfigError("unsupported distribution family");
}

double base_variance(const DistributionSpec& s) {
    switch (s.family) {
    case Family::Gaussian:
        return s.p2;
    case Family::Laplace:
        return 2.0 * s.p2 * s.p2;
    case Family::Exponential:
        return 1.0 / (s.p1 * s.p1);
    case Family::Pareto: {
        const double k = s.p1;
        return k > 2 ? s.p2 * s.p2 * k / ((k - 1.0) * (k - 1.0) * (k - 2.0)) : kInf;
    }
    case Family::Lognormal: {
        const double v = s.p2 * s.p2;
        return std::expm1(v) * std::exp(2.0 * s.p1 + v);
    }
    case Family::PointMass:
        return 0.0;
    }
    throw ConfigError("unsupported distribution family");
}

// Integral of the base CDF from -inf to x.
double base_antiderivative(const DistributionSpec& s, double x) {
    switch (s.family) {
    case Family::Gaussian: {
        const double sd = std::sqrt(s.p2);
        const double u = (x - s.p1) / sd;
        return sd * (u * normal_cdf(u) + normal_pdf(u));
    }
    case Family::Laplace: {
        const double d = (x - s.p1) / s.p2;
        return d < 0 ? 0.5 * s.p2 * std::exp(d) : (x - s.p1) + 0.5 * s.p2 * std::exp(-d);
    }
    case Family::Exponential:
        return x <= 0 ? 0.0 : x + std::expm1(-s.p1 * x) / s.p1;
    case Family::Pareto: {
        const double k = s.p1;
        const double xm = s.p2;
        if (x <= xm) {
            return 0.0;
        }
        if (std::abs(k - 1.0) < 1e-12) {
            return (x - xm) - xm * std::log(x / xm);
        }
        return (x - xm) - std::pow(xm, k) * (std::pow(x, 1.0 - k) - std::pow(xm, 1.0 - k)) / (1.0 - k);
    }
    case Family::Lognormal: {
        if (x <= 0) {
            return 0.0;
        }
        const double lx = std::log(x);
        return x * normal_cdf((lx - s.p1) / s.p2) -
               std::exp(s.p1 + 0.5 * s.p2 * s.p2) * normal_cdf((lx - s.p1 - s.p2 * s.p2) / s.p2);
    }
    case Family::PointMass:
        return std::max(0.0, x - s.p1);
    }
    throw ConfigError("unsupported distribution family");
}

// E[(X - t)^+] for the base variable, computed directly so that far tails do
// not cancel.
double base_excess(const DistributionSpec& s, double t) {
    switch (s.family) {
    case Family::Gaussian: {
        const double sd = std::sqrt(s.p2);
        const double d = (t - s.p1) / sd;
        return sd * (normal_pdf(d) - d * normal_sf(d));
    }
    case Family::Laplace: {
        const double d = (t - s.p1) / s.p2;
        return d >= 0 ? 0.5 * s.p2 * std::exp(-d) : (s.p1 - t) + 0.5 * s.p2 * std::exp(d);
    }
    case Family::Exponential:
        return t < 0 ? 1.0 / s.p1 - t : std::exp(-s.p1 * t) / s.p1;
    case Family::Pareto: {
        const double k = s.p1;
        const double xm = s.p2;
        if (k <= 1.0) {
            return kInf;
        }
        return t < xm ? base_mean(s) - t : std::pow(xm, k) * std::pow(t, 1.0 - k) / (k - 1.0);
    }
    case Family::Lognormal: {
        const double m = base_mean(s);
        if (t <= 0) {
            return m - t;
        }
        const double lt = std::log(t);
        return m * normal_sf((lt - s.p1 - s.p2 * s.p2) / s.p2) - t * normal_sf((lt - s.p1) / s.p2);
    }
    case Family::PointMass:
        return std::max(0.0, s.p1 - t);
    }
    throw ConfigError("unsupported distribution family");
}

double base_sample(const DistributionSpec& s, Rng& rng) {
    switch (s.family) {
    case Family::Gaussian:
        return s.p1 + std::sqrt(s.p2) * boost::random::normal_distribution<double>{}(rng);
    case Family::Laplace: {
        const double e = boost::random::exponential_distribution<double>{}(rng);
        const bool negative = (rng() & 1u) != 0;
        return s.p1 + (negative ? -e : e) * s.p2;
    }
    case Family::Exponential:
        return boost::random::exponential_distribution<double>{s.p1}(rng);
    case Family::Pareto:
        return s.p2 * std::exp(boost::random::exponential_distribution<double>{}(rng) / s.p1);
    case Family::Lognormal:
        return std::exp(s.p1 + s.p2 * boost::random::normal_distribution<double>{}(rng));
    case Family::PointMass:
        return s.p1;
    }
    throw ConfigError("unsupported distribution family");
}

std::pair<double, double> base_support(const DistributionSpec& s) {
    switch (s.family) {
    case Family::Gaussian:
    case Family::Laplace:
        return {-kInf, kInf};
    case Family::Exponential:
        return {0.0, kInf};
    case Family::Pareto:
        return {s.p2, kInf};
    case Family::Lognormal:
        return {0.0, kInf};
    case Family::PointMass:
        return {s.p1, s.p1};
    }
    throw ConfigError("unsupported distribution family");
}

double to_base(const DistributionSpec& s, double y) { return (y - s.shift) / s.scale; }

bool same_affine(const DistributionSpec& a, const DistributionSpec& b) {
    return a.scale == b.scale && a.shift == b.shift;
}

// Gaussian specs remain Gaussian under the affine map; fold it into (mean, var).
DistributionSpec normalized_gaussian(const DistributionSpec& s) {
    return DistributionSpec::gaussian(s.scale * s.p1 + s.shift, s.scale * s.scale * s.p2);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Family family) {
    switch (family) {
    case Family::Gaussian: return "gaussian";
    case Family::Laplace: return "laplace";
    case Family::Exponential: return "exponential";
    case Family::Pareto: return "pareto";
    case Family::Lognormal: return "lognormal";
    case Family::PointMass: return "point_mass";
    }
    return "unknown";
}

std::string_view to_string(TailClass tail) {
    return tail == TailClass::Light ? "light" : "heavy_subexponential";
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::Gaussian, Family::Laplace, Family::Exponential, Family::Pareto,
                     Family::Lognormal, Family::PointMass}) {
        if (to_string(f) == name) {
            return f;
        }
    }
    throw ConfigError("unsupported distribution family '" + std::string(name) + "'");
}

DistributionSpec DistributionSpec::gaussian(double mean, double variance) {
    DistributionSpec s{Family::Gaussian, mean, variance};
    validate(s);
    return s;
}

DistributionSpec DistributionSpec::laplace(double location, double scale) {
    DistributionSpec s{Family::Laplace, location, scale};
    validate(s);
    return s;
}

DistributionSpec DistributionSpec::exponential(double rate) {
    DistributionSpec s{Family::Exponential, rate, 0.0};
    validate(s);
    return s;
}

DistributionSpec DistributionSpec::pareto(double shape, double x_min) {
    DistributionSpec s{Family::Pareto, shape, x_min};
    validate(s);
    return s;
}

DistributionSpec DistributionSpec::lognormal(double log_mean, double log_std) {
    DistributionSpec s{Family::Lognormal, log_mean, log_std};
    validate(s);
    return s;
}

DistributionSpec DistributionSpec::point_mass(double value) {
    DistributionSpec s{Family::PointMass, value, 0.0};
    validate(s);
    return s;
}

DistributionSpec DistributionSpec::shifted(double offset) const {
    DistributionSpec s = *this;
    s.shift += offset;
    return s;
}

DistributionSpec DistributionSpec::affine(double a, double c) const {
    if (!(a > 0) || !std::isfinite(a) || !std::isfinite(c)) {
        throw ConfigError("affine map requires a finite positive scale");
    }
    DistributionSpec s = *this;
    s.scale *= a;
    s.shift = a * s.shift + c;
    return s;
}

void validate(const DistributionSpec& s) {
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw ConfigError(what);
        }
    };
    require(std::isfinite(s.scale) && s.scale > 0, "affine scale must be finite and > 0");
    require(std::isfinite(s.shift), "affine shift must be finite");
    switch (s.family) {
    case Family::Gaussian:
        require(std::isfinite(s.p1), "gaussian mean must be finite");
        require(std::isfinite(s.p2) && s.p2 > 0, "gaussian variance must be > 0");
        break;
    case Family::Laplace:
        require(std::isfinite(s.p1), "laplace location must be finite");
        require(std::isfinite(s.p2) && s.p2 > 0, "laplace scale must be > 0");
        break;
    case Family::Exponential:
        require(std::isfinite(s.p1) && s.p1 > 0, "exponential rate must be > 0");
        break;
    case Family::Pareto:
        require(std::isfinite(s.p1) && s.p1 > 0, "pareto shape K must be > 0");
        require(std::isfinite(s.p2) && s.p2 > 0, "pareto scale x_m must be > 0");
        break;
    case Family::Lognormal:
        require(std::isfinite(s.p1), "lognormal log-mean must be finite");
        require(std::isfinite(s.p2) && s.p2 > 0, "lognormal log-std must be > 0");
        break;
    case Family::PointMass:
        require(std::isfinite(s.p1), "point mass value must be finite");
        break;
    }
}

double density(const DistributionSpec& spec, double x) {
    if (spec.family == Family::PointMass) {
        throw ConfigError("point mass has no density");
    }
    return std::exp(log_density(spec, x));
}

double log_density(const DistributionSpec& spec, double x) {
    return base_log_density(spec, to_base(spec, x)) - std::log(spec.scale);
}

double cdf(const DistributionSpec& spec, double x) { return base_cdf(spec, to_base(spec, x)); }

double cdf_antiderivative(const DistributionSpec& spec, double x) {
    return spec.scale * base_antiderivative(spec, to_base(spec, x));
}

double excess_mean(const DistributionSpec& spec, double t) {
    return spec.scale * base_excess(spec, to_base(spec, t));
}

double mean(const DistributionSpec& spec) { return spec.scale * base_mean(spec) + spec.shift; }

double variance(const DistributionSpec& spec) {
    return spec.scale * spec.scale * base_variance(spec);
}

double sample(const DistributionSpec& spec, Rng& rng) {
    return spec.scale * base_sample(spec, rng) + spec.shift;
}

std::pair<double, double> support(const DistributionSpec& spec) {
    auto [lo, hi] = base_support(spec);
    return {spec.scale * lo + spec.shift, spec.scale * hi + spec.shift};
}

TailClass classify_tail(const DistributionSpec& spec) {
    switch (spec.family) {
    case Family::Pareto:
    case Family::Lognormal:
        return TailClass::HeavySubexponential;
    default:
        return TailClass::Light;
    }
}

DistributionSpec moment_matched_spec(Family family, double m, double v, std::optional<double> shape) {
    if (!std::isfinite(m) || !std::isfinite(v) || v < 0) {
        throw InfeasibleError("moment matching requires finite mean and non-negative variance");
    }
    if (family == Family::PointMass) {
        if (v != 0.0) {
            throw InfeasibleError("point mass cannot have positive variance");
        }
        return DistributionSpec::point_mass(m);
    }
    if (v == 0.0) {
        throw InfeasibleError("continuous family requires positive variance");
    }
    switch (family) {
    case Family::Gaussian:
        return DistributionSpec::gaussian(m, v);
    case Family::Laplace:
        return DistributionSpec::laplace(m, std::sqrt(v / 2.0));
    case Family::Exponential: {
        const double a = std::sqrt(v);
        return DistributionSpec::exponential(1.0).affine(a, m - a);
    }
    case Family::Pareto: {
        if (!shape) {
            throw InfeasibleError("pareto moment matching requires the shape K");
        }
        if (*shape <= 2.0) {
            throw InfeasibleError("pareto with K <= 2 has infinite variance");
        }
        const auto base = DistributionSpec::pareto(*shape, 1.0);
        const double a = std::sqrt(v / variance(base));
        return base.affine(a, m - a * mean(base));
    }
    case Family::Lognormal: {
        const auto base = DistributionSpec::lognormal(0.0, shape.value_or(1.0));
        const double a = std::sqrt(v / variance(base));
        return base.affine(a, m - a * mean(base));
    }
    case Family::PointMass:
        break;
    }
    throw ConfigError("unsupported distribution family");
}

// ---------------------------------------------------------------------------
// SpecLaw

SpecLaw::SpecLaw(DistributionSpec spec) : spec_(spec) { validate(spec_); }

double SpecLaw::cdf(double z) const { return dualcusum::cdf(spec_, z); }
double SpecLaw::cdf_antiderivative(double z) const { return dualcusum::cdf_antiderivative(spec_, z); }
double SpecLaw::excess_mean(double t) const { return dualcusum::excess_mean(spec_, t); }
double SpecLaw::mean() const { return dualcusum::mean(spec_); }
double SpecLaw::variance() const { return dualcusum::variance(spec_); }
double SpecLaw::sample(Rng& rng) const { return dualcusum::sample(spec_, rng); }
TailClass SpecLaw::tail() const { return classify_tail(spec_); }

std::string SpecLaw::describe() const {
    std::ostringstream os;
    os.precision(6);
    os << to_string(spec_.family) << "(" << spec_.p1 << "," << spec_.p2 << ")";
    if (spec_.scale != 1.0 || spec_.shift != 0.0) {
        os << "*" << spec_.scale << "+" << spec_.shift;
    }
    return os.str();
}

IncrementLawPtr make_law(const DistributionSpec& spec) { return std::make_shared<SpecLaw>(spec); }

// ---------------------------------------------------------------------------
// EmpiricalLaw

EmpiricalLaw::EmpiricalLaw(std::vector<double> samples, TailClass tail, std::string description,
                           Generator generator)
    : sorted_(std::move(samples)), tail_(tail), description_(std::move(description)),
      generator_(std::move(generator)) {
    if (sorted_.empty()) {
        throw PrecisionError("empirical law needs at least one sample");
    }
    for (double x : sorted_) {
        if (!std::isfinite(x)) {
            throw InputError("empirical law samples must be finite");
        }
    }
    std::sort(sorted_.begin(), sorted_.end());
    prefix_.resize(sorted_.size() + 1, 0.0);
    std::partial_sum(sorted_.begin(), sorted_.end(), prefix_.begin() + 1);
    const double n = static_cast<double>(sorted_.size());
    mean_ = prefix_.back() / n;
    double ss = 0.0;
    for (double x : sorted_) {
        ss += (x - mean_) * (x - mean_);
    }
    variance_ = sorted_.size() > 1 ? ss / (n - 1.0) : 0.0;
}

double EmpiricalLaw::cdf(double z) const {
    const auto k = std::upper_bound(sorted_.begin(), sorted_.end(), z) - sorted_.begin();
    return static_cast<double>(k) / static_cast<double>(sorted_.size());
}

double EmpiricalLaw::cdf_antiderivative(double z) const {
    const auto k = static_cast<std::size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), z) -
                                            sorted_.begin());
    return (static_cast<double>(k) * z - prefix_[k]) / static_cast<double>(sorted_.size());
}

double EmpiricalLaw::excess_mean(double t) const {
    const auto k = static_cast<std::size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), t) -
                                            sorted_.begin());
    const double upper_sum = prefix_.back() - prefix_[k];
    const double count = static_cast<double>(sorted_.size() - k);
    return (upper_sum - count * t) / static_cast<double>(sorted_.size());
}

double EmpiricalLaw::sample(Rng& rng) const {
    if (generator_) {
        return generator_(rng);
    }
    std::uniform_int_distribution<std::size_t> pick(0, sorted_.size() - 1);
    return sorted_[pick(rng)];
}

// ---------------------------------------------------------------------------
// Log-likelihood ratio laws

IncrementLawPtr llr_increment_law(const DistributionSpec& f0, const DistributionSpec& f1,
                                  Regime under, std::size_t samples, std::uint64_t seed) {
    validate(f0);
    validate(f1);
    const DistributionSpec& obs = under == Regime::PreChange ? f0 : f1;

    if (f0 == f1) {
        return make_law(DistributionSpec::point_mass(0.0));
    }

    if (f0.family == Family::Gaussian && f1.family == Family::Gaussian) {
        const auto g0 = normalized_gaussian(f0);
        const auto g1 = normalized_gaussian(f1);
        const auto gx = normalized_gaussian(obs);
        if (std::abs(g0.p2 - g1.p2) <= 1e-12 * g0.p2) {
            // Z = (m1 - m0)/v * X - (m1^2 - m0^2)/(2v), affine in X.
            const double v = g0.p2;
            const double slope = (g1.p1 - g0.p1) / v;
            const double offset = -(g1.p1 * g1.p1 - g0.p1 * g0.p1) / (2.0 * v);
            return make_law(DistributionSpec::gaussian(slope * gx.p1 + offset, slope * slope * gx.p2));
        }
    }

    if (f0.family == Family::Pareto && f1.family == Family::Pareto && f0.p2 == f1.p2 &&
        same_affine(f0, f1) && f0.p1 > f1.p1) {
        // log(u) is Exp(K) for u = X / x_m under Pareto(K), so
        // Z = log(K1/K0) + (K0 - K1) * log(u) is a shifted exponential.
        const double k0 = f0.p1;
        const double k1 = f1.p1;
        return make_law(DistributionSpec::exponential(obs.p1).affine(k0 - k1, std::log(k1 / k0)));
    }

    if (f0.family == Family::Exponential && f1.family == Family::Exponential && same_affine(f0, f1) &&
        f0.p1 > f1.p1) {
        // Z = log(r1/r0) + (r0 - r1) * X_base with X_base ~ Exp(r_regime).
        const double r0 = f0.p1;
        const double r1 = f1.p1;
        return make_law(DistributionSpec::exponential(obs.p1).affine(r0 - r1, std::log(r1 / r0)));
    }

    const auto s0 = support(f0);
    const auto s1 = support(f1);
    auto close = [](double a, double b) {
        return a == b || (std::isfinite(a) && std::isfinite(b) &&
                          std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)));
    };
    if (!close(s0.first, s1.first) || !close(s0.second, s1.second)) {
        throw DomainMismatchError("log-likelihood ratio requires f0 and f1 with a common support");
    }
    if (f0.family == Family::PointMass) {
        throw DomainMismatchError("log-likelihood ratio undefined for point masses");
    }

    auto generator = [f0, f1, obs](Rng& rng) {
        const double x = dualcusum::sample(obs, rng);
        return log_density(f1, x) - log_density(f0, x);
    };
    Rng rng = make_stream(seed, under == Regime::PreChange ? 0 : 1);
    std::vector<double> draws(samples);
    for (auto& d : draws) {
        d = generator(rng);
    }
    std::ostringstream os;
    os << "llr[" << SpecLaw(f0).describe() << "->" << SpecLaw(f1).describe() << "]";
    return std::make_shared<EmpiricalLaw>(std::move(draws), TailClass::Light, os.str(), generator);
}

IncrementLawPtr increment_law(const IncrementSpec& spec) {
    return std::visit(
        [&](const auto& kind) -> IncrementLawPtr {
            using T = std::decay_t<decltype(kind)>;
            if constexpr (std::is_same_v<T, LlrIncrement>) {
                return llr_increment_law(kind.f0, kind.f1, spec.under);
            } else {
                if (!std::isfinite(kind.D)) {
                    throw ConfigError("shift D must be finite");
                }
                const auto& obs = spec.under == Regime::PreChange ? kind.pre : kind.post;
                return make_law(obs.shifted(-kind.D));
            }
        },
        spec.kind);
}

void check_drift_signs(const std::variant<LlrIncrement, ShiftedIncrement>& kind) {
    const double pre = increment_law({kind, Regime::PreChange})->mean();
    const double post = increment_law({kind, Regime::PostChange})->mean();
    if (!(pre < 0.0)) {
        throw ModelViolationError("pre-change increment mean must be negative");
    }
    if (!(post > 0.0)) {
        throw ModelViolationError("post-change increment mean must be positive");
    }
}

}  // namespace dualcusum
