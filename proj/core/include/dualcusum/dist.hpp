#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dualcusum/random.hpp"

namespace dualcusum {

enum class Family { Gaussian, Laplace, Exponential, Pareto, Lognormal, PointMass };

enum class TailClass { Light, HeavySubexponential };

enum class Regime { PreChange, PostChange };

std::string_view to_string(Family family);
std::string_view to_string(TailClass tail);
/// Parses the config-file spelling ("gaussian", "pareto", ...). Throws ConfigError.
Family parse_family(std::string_view name);

/// A univariate law: a base family variable X followed by the affine map
/// scale * X + shift (scale > 0). The affine part carries both moment matching
/// and the "offset added to a base spec" used for post-change shifts.
///
/// Parameters per family:
///   Gaussian    p1 = mean,     p2 = variance
///   Laplace     p1 = location, p2 = scale
///   Exponential p1 = rate
///   Pareto      p1 = shape K,  p2 = scale x_m
///   Lognormal   p1 = log-mean, p2 = log-std
///   PointMass   p1 = value
struct DistributionSpec {
    Family family = Family::Gaussian;
    double p1 = 0.0;
    double p2 = 1.0;
    double scale = 1.0;
    double shift = 0.0;

    static DistributionSpec gaussian(double mean, double variance);
    static DistributionSpec laplace(double location, double scale);
    static DistributionSpec exponential(double rate);
    static DistributionSpec pareto(double shape, double x_min);
    static DistributionSpec lognormal(double log_mean, double log_std);
    static DistributionSpec point_mass(double value);

    /// Same law moved by `offset`.
    [[nodiscard]] DistributionSpec shifted(double offset) const;
    /// Law of a * X + c for X with this law; a must be positive.
    [[nodiscard]] DistributionSpec affine(double a, double c) const;

    friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

/// Throws ConfigError when parameters violate the family's constraints.
void validate(const DistributionSpec& spec);

double density(const DistributionSpec& spec, double x);
double log_density(const DistributionSpec& spec, double x);
double cdf(const DistributionSpec& spec, double x);
/// G(x) = integral of the CDF from -inf to x, i.e. E[(x - X)^+].
double cdf_antiderivative(const DistributionSpec& spec, double x);
/// E[(X - t)^+]; +inf when the mean does not exist.
double excess_mean(const DistributionSpec& spec, double t);
double mean(const DistributionSpec& spec);
double variance(const DistributionSpec& spec);
double sample(const DistributionSpec& spec, Rng& rng);
/// Closed support interval [lower, upper] (infinite ends allowed).
std::pair<double, double> support(const DistributionSpec& spec);

/// Static per-family lookup: Gaussian/Laplace/Exponential/PointMass are light,
/// Pareto/Lognormal subexponential.
TailClass classify_tail(const DistributionSpec& spec);

/// Builds a spec of the given family with the requested mean and variance via
/// an affine map of the base family. `shape` is the Pareto index K (required,
/// must exceed 2) or the Lognormal log-std (default 1). Throws InfeasibleError.
DistributionSpec moment_matched_spec(Family family, double mean, double variance,
                                     std::optional<double> shape = std::nullopt);

/// Law of a CUSUM increment as needed by the renewal solvers and simulators.
class IncrementLaw {
public:
    virtual ~IncrementLaw() = default;

    virtual double cdf(double z) const = 0;
    virtual double cdf_antiderivative(double z) const = 0;
    virtual double excess_mean(double t) const = 0;
    virtual double mean() const = 0;
    virtual double variance() const = 0;
    virtual double sample(Rng& rng) const = 0;
    virtual TailClass tail() const = 0;
    virtual std::string describe() const = 0;

    /// Integral of the CDF over [a, b].
    double cdf_integral(double a, double b) const {
        return cdf_antiderivative(b) - cdf_antiderivative(a);
    }
};

using IncrementLawPtr = std::shared_ptr<const IncrementLaw>;

/// Closed-form law backed by a DistributionSpec.
class SpecLaw final : public IncrementLaw {
public:
    explicit SpecLaw(DistributionSpec spec);

    double cdf(double z) const override;
    double cdf_antiderivative(double z) const override;
    double excess_mean(double t) const override;
    double mean() const override;
    double variance() const override;
    double sample(Rng& rng) const override;
    TailClass tail() const override;
    std::string describe() const override;

    const DistributionSpec& spec() const { return spec_; }

private:
    DistributionSpec spec_;
};

/// Law represented by sorted samples. The CDF is the empirical step function,
/// so CDF integrals are exact for that step function. Sampling draws fresh
/// values from the generator when one is supplied, else resamples.
class EmpiricalLaw final : public IncrementLaw {
public:
    using Generator = std::function<double(Rng&)>;

    EmpiricalLaw(std::vector<double> samples, TailClass tail, std::string description,
                 Generator generator = {});

    double cdf(double z) const override;
    double cdf_antiderivative(double z) const override;
    double excess_mean(double t) const override;
    double mean() const override { return mean_; }
    double variance() const override { return variance_; }
    double sample(Rng& rng) const override;
    TailClass tail() const override { return tail_; }
    std::string describe() const override { return description_; }

    std::size_t size() const { return sorted_.size(); }

private:
    std::vector<double> sorted_;
    std::vector<double> prefix_;  // prefix_[k] = sum of the k smallest samples
    double mean_ = 0.0;
    double variance_ = 0.0;
    TailClass tail_;
    std::string description_;
    Generator generator_;
};

IncrementLawPtr make_law(const DistributionSpec& spec);

/// Law of Z = log(f1(X)/f0(X)) for X drawn under the selected regime.
/// Closed forms are used for equal-variance Gaussians, Pareto pairs with a
/// common scale (a shifted exponential), exponential pairs with decreasing
/// rate, and identical laws (Z = 0). Everything else is estimated from
/// `samples` draws. Throws DomainMismatchError if the supports differ.
IncrementLawPtr llr_increment_law(const DistributionSpec& f0, const DistributionSpec& f1,
                                  Regime under, std::size_t samples = 200000,
                                  std::uint64_t seed = 1);

/// Sensor increment definitions: log-likelihood ratio or shifted observation.
struct LlrIncrement {
    DistributionSpec f0;
    DistributionSpec f1;
};

struct ShiftedIncrement {
    DistributionSpec pre;   // observation law before the change
    DistributionSpec post;  // observation law after the change
    double D = 0.0;
};

struct IncrementSpec {
    std::variant<LlrIncrement, ShiftedIncrement> kind;
    Regime under = Regime::PreChange;
};

IncrementLawPtr increment_law(const IncrementSpec& spec);

/// Throws ModelViolationError unless the pre-change mean is negative and the
/// post-change mean positive.
void check_drift_signs(const std::variant<LlrIncrement, ShiftedIncrement>& kind);

}  // namespace dualcusum
