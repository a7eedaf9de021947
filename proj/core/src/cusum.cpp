#include "dualcusum/cusum.hpp"

#include <cmath>

#include "dualcusum/errors.hpp"

namespace dualcusum {

CusumDetector::CusumDetector(double threshold, double initial_state)
    : state_(initial_state), threshold_(threshold) {
    if (!(threshold > 0) || !std::isfinite(threshold)) {
        throw ConfigError("CUSUM threshold must be finite and > 0");
    }
    if (!(initial_state >= 0) || !std::isfinite(initial_state)) {
        throw ConfigError("CUSUM initial state must be finite and >= 0");
    }
}

void CusumDetector::step(double z, std::int64_t k) {
    if (!std::isfinite(z)) {
        throw InputError("CUSUM increment must be finite");
    }
    state_ = std::max(0.0, state_ + z);
    if (!crossed_at_ && state_ >= threshold_) {
        crossed_at_ = k;
        overshoot_ = state_ - threshold_;
    }
}

void CusumDetector::reset(double initial_state) {
    state_ = initial_state;
    crossed_at_.reset();
    overshoot_.reset();
}

namespace {

double log_ratio(double x, const DistributionSpec& num, const DistributionSpec& den) {
    const double ln = log_density(num, x);
    const double ld = log_density(den, x);
    if (std::isinf(ld) && ld < 0) {
        if (std::isinf(ln) && ln < 0) {
            throw InputError("observation outside the support of both densities");
        }
        return kCertainChangeIncrement;
    }
    if (std::isinf(ln) && ln < 0) {
        return -kCertainChangeIncrement;
    }
    return ln - ld;
}

}  // namespace

double sensor_increment(double x, const SensorMode& mode) {
    if (const auto* p = std::get_if<ParametricMode>(&mode)) {
        return log_ratio(x, p->f1, p->f0);
    }
    return x - std::get<NonparametricMode>(mode).D;
}

double fusion_increment(double y, const FusionModel& model) {
    if (const auto* p = std::get_if<ParametricFusion>(&model)) {
        if (p->noise.family == Family::Gaussian) {
            // Gaussian shift LLR in closed form: (s*y - s^2/2)/var.
            const double m = p->noise.scale * p->noise.p1 + p->noise.shift;
            const double v = p->noise.scale * p->noise.scale * p->noise.p2;
            const double s = p->shift;
            return (s * (y - m) - 0.5 * s * s) / v;
        }
        return log_ratio(y, p->noise.shifted(p->shift), p->noise);
    }
    return y - std::get<NonparametricFusion>(model).D;
}

double transmit_decision(const CusumDetector& det, double b) { return det.above() ? b : 0.0; }

}  // namespace dualcusum
