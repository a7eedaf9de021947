#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dualcusum/cusum.hpp"
#include "dualcusum/dist.hpp"

namespace dualcusum {

enum class SensorKind { Parametric, Nonparametric };
enum class FusionKind { Parametric, Nonparametric };

/// Full system parameterization shared by the analytic model, the simulator
/// and the optimizer.
///
/// Sensors observe X ~ pre before the change and X ~ post from the change slot
/// on. Parametric sensors use log(post(X)/pre(X)); nonparametric sensors use
/// X - D. The fusion center observes sum of transmissions + MAC noise and runs
/// either the Gaussian-shift LLR with shift b*I or the nonparametric Y - D.
struct NetworkConfig {
    int sensors = 5;
    SensorKind sensor_kind = SensorKind::Nonparametric;
    DistributionSpec pre = DistributionSpec::gaussian(-0.3, 1.0);
    DistributionSpec post = DistributionSpec::gaussian(0.3, 1.0);
    double sensor_D = 0.0;

    FusionKind fusion_kind = FusionKind::Parametric;
    double fusion_D = 0.0;
    DistributionSpec mac_noise = DistributionSpec::gaussian(0.0, 1.0);

    double gamma = 15.0;
    double beta = 18.0;
    double b = 1.0;
    double I = 2.0;
    double rho = 0.005;
    double energy_budget = 5.0;

    /// Fixed change slot instead of T ~ Geom(rho) on {1, 2, ...}. Observations
    /// from slot T on follow post; T = 0 makes every observation post-change.
    std::optional<std::int64_t> fixed_change_time;
    /// Stop each run at the change slot; only P_FA is then meaningful.
    bool stop_at_change = false;
    /// Absolute slot cap; default ceil(50 / rho) past the change slot.
    std::optional<std::int64_t> horizon_cap;

    std::uint64_t replications = 100000;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0 = hardware concurrency

    /// Throws ConfigError on invalid values.
    void validate() const;

    SensorMode sensor_mode() const;
    FusionModel fusion_model() const;
    /// Sensor increment definition (LLR or shifted observation).
    std::variant<LlrIncrement, ShiftedIncrement> increment_kind() const;
    std::int64_t cap_after_change() const;

    /// Canonical "key = value" text; stable across runs and locales.
    std::string canonical() const;
    /// 16 hex digits of a FNV-1a hash of canonical().
    std::string hash() const;
};

/// Formats a double with 6 significant digits in the classic locale.
std::string format_number(double v);
/// Round-trippable text (17 significant digits, classic locale).
std::string format_exact(double v);
std::string describe_spec(const DistributionSpec& spec);

}  // namespace dualcusum
