#include "dualcusum/config.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <locale>
#include <sstream>

#include "dualcusum/errors.hpp"

namespace dualcusum {

namespace {

std::string format_with(double v, int digits) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace

std::string format_number(double v) { return format_with(v, 6); }
std::string format_exact(double v) { return format_with(v, 17); }

std::string describe_spec(const DistributionSpec& spec) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << to_string(spec.family) << "(" << format_exact(spec.p1) << "," << format_exact(spec.p2)
       << ")*" << format_exact(spec.scale) << "+" << format_exact(spec.shift);
    return os.str();
}

void NetworkConfig::validate() const {
    if (sensors < 1) {
        throw ConfigError("sensors must be >= 1");
    }
    auto positive = [](double v, const char* name) {
        if (!(v > 0) || !std::isfinite(v)) {
            throw ConfigError(std::string(name) + " must be finite and > 0");
        }
    };
    positive(gamma, "gamma");
    positive(beta, "beta");
    positive(I, "I");
    if (!(b >= 0) || !std::isfinite(b)) {
        throw ConfigError("b must be finite and >= 0");
    }
    if (!(rho > 0 && rho < 1)) {
        throw ConfigError("rho must lie in (0,1)");
    }
    if (!(energy_budget > 0)) {
        throw ConfigError("energy budget must be > 0");
    }
    if (replications < 1) {
        throw ConfigError("replications must be >= 1");
    }
    if (fixed_change_time && *fixed_change_time < 0) {
        throw ConfigError("change time must be >= 0");
    }
    if (horizon_cap && *horizon_cap < 1) {
        throw ConfigError("horizon cap must be >= 1");
    }
    dualcusum::validate(pre);
    dualcusum::validate(post);
    dualcusum::validate(mac_noise);
    if (!std::isfinite(sensor_D) || !std::isfinite(fusion_D)) {
        throw ConfigError("D must be finite");
    }
}

SensorMode NetworkConfig::sensor_mode() const {
    if (sensor_kind == SensorKind::Parametric) {
        return ParametricMode{pre, post};
    }
    return NonparametricMode{sensor_D};
}

FusionModel NetworkConfig::fusion_model() const {
    if (fusion_kind == FusionKind::Parametric) {
        return ParametricFusion{mac_noise, b * I};
    }
    return NonparametricFusion{fusion_D};
}

std::variant<LlrIncrement, ShiftedIncrement> NetworkConfig::increment_kind() const {
    if (sensor_kind == SensorKind::Parametric) {
        return LlrIncrement{pre, post};
    }
    return ShiftedIncrement{pre, post, sensor_D};
}

std::int64_t NetworkConfig::cap_after_change() const {
    if (horizon_cap) {
        return *horizon_cap;
    }
    return static_cast<std::int64_t>(std::ceil(50.0 / rho));
}

std::string NetworkConfig::canonical() const {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << "sensors = " << sensors << "\n"
       << "sensor_kind = " << (sensor_kind == SensorKind::Parametric ? "parametric" : "nonparametric") << "\n"
       << "pre = " << describe_spec(pre) << "\n"
       << "post = " << describe_spec(post) << "\n"
       << "sensor_D = " << format_exact(sensor_D) << "\n"
       << "fusion_kind = " << (fusion_kind == FusionKind::Parametric ? "parametric" : "nonparametric") << "\n"
       << "fusion_D = " << format_exact(fusion_D) << "\n"
       << "mac_noise = " << describe_spec(mac_noise) << "\n"
       << "gamma = " << format_exact(gamma) << "\n"
       << "beta = " << format_exact(beta) << "\n"
       << "b = " << format_exact(b) << "\n"
       << "I = " << format_exact(I) << "\n"
       << "rho = " << format_exact(rho) << "\n"
       << "energy_budget = " << format_exact(energy_budget) << "\n"
       << "fixed_change_time = " << (fixed_change_time ? std::to_string(*fixed_change_time) : "none") << "\n"
       << "stop_at_change = " << (stop_at_change ? "true" : "false") << "\n"
       << "horizon_cap = " << (horizon_cap ? std::to_string(*horizon_cap) : "default") << "\n"
       << "replications = " << replications << "\n"
       << "seed = " << seed << "\n";
    return os.str();
}

std::string NetworkConfig::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dualcusum
