#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <variant>

#include "dualcusum/dist.hpp"

namespace dualcusum {

/// Returned by the log-likelihood increments when f0(x) = 0 < f1(x). Large but
/// finite so that a detector crosses immediately without poisoning W with inf.
inline constexpr double kCertainChangeIncrement = 1e12;

/// Reflected random walk W_k = max(0, W_{k-1} + z_k) with a threshold.
///
/// The first slot with W >= threshold is recorded together with its overshoot.
/// The detector keeps evolving after crossing; stopping is up to the caller.
class CusumDetector {
public:
    explicit CusumDetector(double threshold, double initial_state = 0.0);

    /// Applies one increment at time index k. Throws InputError for NaN/inf.
    void step(double z, std::int64_t k);

    double state() const { return state_; }
    double threshold() const { return threshold_; }
    bool crossed() const { return crossed_at_.has_value(); }
    std::optional<std::int64_t> crossed_at() const { return crossed_at_; }
    std::optional<double> overshoot() const { return overshoot_; }

    /// Strictly above the threshold (the transmit rule), unlike the >= used
    /// for the first passage time.
    bool above() const { return state_ > threshold_; }

    void reset(double initial_state = 0.0);

private:
    double state_;
    double threshold_;
    std::optional<std::int64_t> crossed_at_;
    std::optional<double> overshoot_;
};

struct ParametricMode {
    DistributionSpec f0;
    DistributionSpec f1;
};

struct NonparametricMode {
    double D = 0.0;
};

using SensorMode = std::variant<ParametricMode, NonparametricMode>;

/// log(f1(x)/f0(x)) or x - D.
double sensor_increment(double x, const SensorMode& mode);

/// Fusion CUSUM on the MAC output. Parametric fusion uses g0 = MAC noise law
/// and g_I = g0 shifted by b*I.
struct ParametricFusion {
    DistributionSpec noise;
    double shift = 1.0;  // b * I
};

struct NonparametricFusion {
    double D = 0.0;
};

using FusionModel = std::variant<ParametricFusion, NonparametricFusion>;

double fusion_increment(double y, const FusionModel& model);

/// b when W > threshold, else 0.
double transmit_decision(const CusumDetector& det, double b);

}  // namespace dualcusum
