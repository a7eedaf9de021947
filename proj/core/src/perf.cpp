#include "dualcusum/perf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "dualcusum/detail/normal.hpp"
#include "dualcusum/errors.hpp"

namespace dualcusum {

void FalseAlarmInputs::validate() const {
    if (!(lambda_gamma >= 0) || !(lambda0 >= 0)) {
        throw ConfigError("rates must be >= 0");
    }
    if (!(ptilde >= 0 && ptilde <= 1)) {
        throw ConfigError("ptilde must lie in [0,1]");
    }
    if (sensors < 1) {
        throw ConfigError("sensors must be >= 1");
    }
    if (!(rho > 0 && rho < 1)) {
        throw ConfigError("rho must lie in (0,1)");
    }
}

double pfa_geometric(const FalseAlarmInputs& in) {
    in.validate();
    const double r = in.lambda0 + in.lambda_gamma * in.sensors * in.ptilde;
    // 1 - e rho / (1 - e (1 - rho)) = (1 - e) / (1 - e + e rho), e = exp(-r).
    const double one_minus_e = -std::expm1(-r);
    const double e = std::exp(-r);
    const double denom = one_minus_e + e * in.rho;
    return std::clamp(one_minus_e / denom, 0.0, 1.0);
}

double ptilde_light(const BatchLaw& batch, const IncrementLaw& one_sender, double beta, const SolverOptions& opts) {
    if (batch.tail_remainder() > 1e-3) {
        throw PrecisionError("batch horizon leaves more than 1e-3 of the mass uncovered");
    }
    const std::size_t n = batch.horizon();
    if (n == 0) {
        return 0.0;
    }
    const auto survival = solve_fpt_survival(one_sender, beta, n, opts);
    double p = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        p += batch.pmf(i) * (1.0 - survival[i]);
    }
    return std::clamp(p, 0.0, 1.0);
}

double ptilde_heavy(const BatchLaw& batch, const std::vector<double>& fusion_drifts, int m_star, double beta,
                    const ExceedanceModel& exceedances) {
    if (m_star < 1) {
        return 0.0;  // no sender count gives the fusion statistic positive drift
    }
    if (m_star > exceedances.sensors || static_cast<std::size_t>(m_star) >= fusion_drifts.size()) {
        throw ConfigError("minimum sender count exceeds the number of sensors");
    }
    const double mu = fusion_drifts[static_cast<std::size_t>(m_star)];
    if (!(mu > 0)) {
        throw ModelViolationError("fusion drift at the minimum sender count must be positive");
    }
    const double span = std::ceil(beta / mu - 1e-12);
    const auto d = static_cast<std::size_t>(std::max(1.0, span));
    const double q_d = batch.ccdf(d - 1);  // P(eta >= d)
    if (m_star == 1) {
        return q_d;
    }
    const double others = static_cast<double>(exceedances.sensors - 1) * exceedances.lambda_gamma;
    auto overlap = [&](double length) {
        const double window = length - static_cast<double>(d) + 1.0;
        if (window <= 0) {
            return 0.0;
        }
        return boost::math::gamma_p(static_cast<double>(m_star - 1), others * window * q_d);
    };
    double p = 0.0;
    for (std::size_t j = d; j <= batch.horizon(); ++j) {
        p += batch.pmf(j) * overlap(static_cast<double>(j));
    }
    p += batch.tail_remainder() * overlap(static_cast<double>(batch.horizon() + 1));
    return std::clamp(p, 0.0, 1.0);
}

double lambda0(const IncrementLaw& no_sender, double beta, const SolverOptions& opts) {
    if (no_sender.variance() <= 0.0 && no_sender.mean() <= 0.0) {
        return 0.0;
    }
    try {
        return solve_mean_fpt(no_sender, beta, opts).law.lambda_gamma;
    } catch (const DivergenceError&) {
        if (no_sender.mean() < 0) {
            // The linear system is singular to working precision: the mean
            // passage time exceeds ~1e16 slots, so the rate is zero at double precision.
            return 0.0;
        }
        throw;
    }
}

double mean_min_fpt(int k, double x, double drift, double variance) {
    if (k < 1) {
        throw ConfigError("m(k, x) needs k >= 1");
    }
    if (!(drift > 0)) {
        throw ModelViolationError("m(k, x) needs positive post-change drift");
    }
    if (x <= 0) {
        return 0.0;
    }
    const double mean = x / drift;
    const double sd = std::sqrt(variance * x / (drift * drift * drift));
    double sum = 0.0;
    for (std::int64_t i = 0;; ++i) {
        const double p = sd > 0 ? detail::normal_cdf((mean - static_cast<double>(i)) / sd)
                                : (static_cast<double>(i) < mean ? 1.0 : 0.0);
        const double term = std::pow(p, k);
        sum += term;
        if (term < 1e-12 && static_cast<double>(i) > mean) {
            break;
        }
    }
    return sum;
}

int DelayInputs::m_star() const { return minimum_senders(fusion_drifts); }

int minimum_senders(const std::vector<double>& drifts) {
    for (std::size_t l = 0; l < drifts.size(); ++l) {
        if (drifts[l] > 0) {
            return static_cast<int>(l);
        }
    }
    return -1;
}

DelayBreakdown edd_breakdown(const DelayInputs& in) {
    const int L = in.sensors;
    if (L < 1 || in.fusion_drifts.size() != static_cast<std::size_t>(L) + 1) {
        throw ConfigError("need fusion drifts for 0..L senders");
    }
    if (!(in.fusion_drifts.back() > 0)) {
        throw InfeasibleError("fusion drift stays non-positive with all sensors transmitting");
    }
    DelayBreakdown out;
    const auto n = static_cast<std::size_t>(L);
    out.levels.assign(n, 0.0);
    out.gaps.assign(n, 0.0);

    // gamma_L = gamma, gamma_{l-1} = gamma_l - mu m(l, gamma_l). Once some
    // m(k, gamma_k) <= 1, the remaining epochs with l >= 2 collapse to 0.
    double level = in.gamma;
    bool collapsed = false;
    for (int l = L; l >= 1; --l) {
        const auto idx = static_cast<std::size_t>(l - 1);
        out.levels[idx] = level;
        double gap = mean_min_fpt(l, level, in.drift, in.variance);
        if (l >= 2) {
            if (collapsed) {
                gap = 0.0;
            } else if (gap <= 1.0) {
                collapsed = true;
                gap = 0.0;
            }
        }
        out.gaps[idx] = gap;
        level -= in.drift * gap;
    }

    // E[t_i] = sum_{l=L-i+1}^{L} m(l, gamma_l).
    out.epochs.assign(n, 0.0);
    double acc = 0.0;
    for (int i = 1; i <= L; ++i) {
        acc += out.gaps[static_cast<std::size_t>(L - i)];
        out.epochs[static_cast<std::size_t>(i - 1)] = acc;
    }

    out.fbar.assign(n, 0.0);
    for (int k = 2; k <= L; ++k) {
        const double mu = in.fusion_drifts[static_cast<std::size_t>(k - 1)];
        const double step = mu > 0 ? mu * out.gaps[static_cast<std::size_t>(L - k)] : 0.0;
        out.fbar[static_cast<std::size_t>(k - 1)] = out.fbar[static_cast<std::size_t>(k - 2)] + step;
    }

    // First epoch whose drift carries F_k to beta before the next epoch.
    for (int i = 1; i <= L; ++i) {
        const double mu = in.fusion_drifts[static_cast<std::size_t>(i)];
        if (!(mu > 0)) {
            continue;
        }
        const double t_i = out.epochs[static_cast<std::size_t>(i - 1)];
        const double next = i < L ? out.epochs[static_cast<std::size_t>(i)] : std::numeric_limits<double>::infinity();
        const double cross = t_i + std::max(0.0, in.beta - out.fbar[static_cast<std::size_t>(i - 1)]) / mu;
        if (cross < next) {
            out.j = i;
            out.edd = cross;
            return out;
        }
    }
    throw InfeasibleError("no transition epoch reaches the fusion threshold");
}

double edd_approx(const DelayInputs& in) { return edd_breakdown(in).edd; }

IncrementLawPtr fusion_increment_law(const NetworkConfig& cfg, int senders, std::size_t samples, std::uint64_t seed) {
    const double offset = static_cast<double>(senders) * cfg.b;
    if (cfg.fusion_kind == FusionKind::Nonparametric) {
        return make_law(cfg.mac_noise.shifted(offset - cfg.fusion_D));
    }
    const double s = cfg.b * cfg.I;
    if (s == 0.0) {
        return make_law(DistributionSpec::point_mass(0.0));
    }
    if (cfg.mac_noise.family == Family::Gaussian) {
        // (s (y - m) - s^2/2) / v with y - m ~ N(offset, v).
        const double v = variance(cfg.mac_noise);
        return make_law(DistributionSpec::gaussian((s * offset - 0.5 * s * s) / v, s * s / v));
    }
    const auto model = cfg.fusion_model();
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(senders));
    std::vector<double> draws(samples);
    for (auto& z : draws) {
        z = fusion_increment(offset + sample(cfg.mac_noise, rng), model);
    }
    const auto noise = cfg.mac_noise;
    auto generator = [noise, offset, model](Rng& r) { return fusion_increment(offset + sample(noise, r), model); };
    return std::make_shared<EmpiricalLaw>(std::move(draws), TailClass::Light, "fusion increment", generator);
}

std::vector<double> fusion_drifts(const NetworkConfig& cfg) {
    std::vector<double> out;
    for (int l = 0; l <= cfg.sensors; ++l) {
        out.push_back(fusion_increment_law(cfg, l)->mean());
    }
    return out;
}

std::string_view to_string(PerfReport::Method m) {
    return m == PerfReport::Method::Analytical ? "analytical" : "simulated";
}

std::string PerfReport::csv_header() {
    return "method,config_hash,pfa,pfa_ci,edd,edd_ci,energy,energy_ci,replications,false_alarms,censored,"
           "lambda_gamma,lambda0,ptilde";
}

std::string PerfReport::csv_row() const {
    std::ostringstream os;
    os << to_string(method) << "," << config_hash << "," << format_number(pfa) << "," << format_number(pfa_ci) << ","
       << format_number(edd) << "," << format_number(edd_ci) << "," << format_number(energy) << ","
       << format_number(energy_ci) << "," << replications << "," << false_alarms << "," << censored << ","
       << format_number(lambda_gamma) << "," << format_number(lambda0) << "," << format_number(ptilde);
    return os.str();
}

std::string PerfReport::to_json() const {
    auto finite = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) {
            return v;
        }
        return nullptr;
    };
    nlohmann::json j;
    j["method"] = std::string(to_string(method));
    j["config_hash"] = config_hash;
    j["pfa"] = finite(pfa);
    j["edd"] = finite(edd);
    j["energy"] = finite(energy);
    if (method == Method::Simulated) {
        j["pfa_ci"] = pfa_ci;
        j["edd_ci"] = edd_ci;
        j["energy_ci"] = energy_ci;
        j["edd_conditional"] = finite(edd_conditional);
        j["replications"] = replications;
        j["false_alarms"] = false_alarms;
        j["censored"] = censored;
    } else {
        j["lambda_gamma"] = lambda_gamma;
        j["lambda0"] = lambda0;
        j["ptilde"] = ptilde;
        j["mean_overshoot"] = mean_overshoot;
        j["mean_batch"] = mean_batch;
        j["edd_feasible"] = edd_feasible;
    }
    j["warnings"] = warnings;
    return j.dump(2);
}

double analytic_energy(double b, double lambda_gamma, double mean_batch, double pre_change_slots,
                       const DelayBreakdown& delay) {
    const double pre = lambda_gamma * mean_batch * pre_change_slots;
    if (!std::isfinite(delay.edd)) {
        return std::numeric_limits<double>::infinity();
    }
    double post = 0.0;
    for (double t : delay.epochs) {
        post += std::max(0.0, delay.edd - t);
    }
    if (!delay.epochs.empty()) {
        post /= static_cast<double>(delay.epochs.size());
    }
    return b * b * (pre + post);
}

AnalyticModel::AnalyticModel(AnalyticOptions opts) : opts_(opts) {}

namespace {

std::string sensor_key(const NetworkConfig& cfg) {
    std::ostringstream os;
    os << (cfg.sensor_kind == SensorKind::Parametric ? "P|" : "N|") << describe_spec(cfg.pre) << "|"
       << describe_spec(cfg.post) << "|" << format_exact(cfg.sensor_D);
    return os.str();
}

}  // namespace

const SensorSummary& AnalyticModel::sensor(const NetworkConfig& cfg) {
    const std::string key = sensor_key(cfg) + "|" + format_exact(cfg.gamma);
    if (auto it = sensors_.find(key); it != sensors_.end()) {
        return it->second;
    }
    const auto law = increment_law({cfg.increment_kind(), Regime::PreChange});
    SensorSummary s;
    s.drift = law->mean();
    s.variance = law->variance();
    s.tail = law->tail();
    if (!(s.drift < 0)) {
        throw ModelViolationError("pre-change sensor drift must be negative");
    }
    s.fpt = solve_mean_fpt(*law, cfg.gamma, opts_.solver).law;
    // Lognormal keeps the light-tail batch formula, which fits it better.
    const bool lognormal = cfg.sensor_kind == SensorKind::Nonparametric && cfg.pre.family == Family::Lognormal;
    s.heavy_batch = s.tail == TailClass::HeavySubexponential && !lognormal;
    double mean_overshoot = 0.0;
    try {
        mean_overshoot = solve_mean_overshoot(*law, cfg.gamma, opts_.solver).mean;
    } catch (const InfeasibleError&) {
        mean_overshoot = std::numeric_limits<double>::infinity();
    }
    s.overshoot.mean = mean_overshoot;
    s.overshoot.model = OvershootLaw::Model::ExponentialFit;
    if (s.heavy_batch) {
        s.batch = batch_law_heavy(*law, cfg.gamma, std::nullopt, opts_.batch_replications, opts_.seed);
    } else {
        s.batch = batch_law_light(mean_overshoot, s.drift, s.variance);
    }
    return sensors_.emplace(key, std::move(s)).first->second;
}

namespace {

std::string drift_key(const NetworkConfig& cfg) {
    std::ostringstream os;
    os << (cfg.fusion_kind == FusionKind::Parametric ? "P|" : "N|") << describe_spec(cfg.mac_noise) << "|"
       << format_exact(cfg.fusion_D) << "|" << format_exact(cfg.b) << "|" << format_exact(cfg.I) << "|"
       << cfg.sensors;
    return os.str();
}

}  // namespace

const std::vector<double>& AnalyticModel::drifts(const NetworkConfig& cfg) {
    const std::string key = drift_key(cfg);
    if (auto it = drifts_.find(key); it != drifts_.end()) {
        return it->second;
    }
    return drifts_.emplace(key, fusion_drifts(cfg)).first->second;
}

const AnalyticModel::FusionSummary& AnalyticModel::fusion(const NetworkConfig& cfg) {
    std::ostringstream os;
    os << (cfg.fusion_kind == FusionKind::Parametric ? "P|" : "N|") << describe_spec(cfg.mac_noise) << "|"
       << format_exact(cfg.fusion_D) << "|" << format_exact(cfg.b) << "|" << format_exact(cfg.I) << "|"
       << format_exact(cfg.beta) << "|" << cfg.sensors;
    const std::string key = os.str();
    if (auto it = fusions_.find(key); it != fusions_.end()) {
        return it->second;
    }
    FusionSummary f;
    f.key = key;
    f.drifts = drifts(cfg);
    const auto none = fusion_increment_law(cfg, 0);
    f.lambda0 = none->mean() < 0 || none->variance() == 0.0 ? lambda0(*none, cfg.beta, opts_.solver)
                                                             : std::numeric_limits<double>::infinity();
    f.one_sender = fusion_increment_law(cfg, 1);
    return fusions_.emplace(key, std::move(f)).first->second;
}

double AnalyticModel::light_ptilde(const NetworkConfig& cfg, const SensorSummary& s, const FusionSummary& f) {
    const std::string key = f.key + "|" + sensor_key(cfg) + "|" + format_exact(cfg.gamma);
    if (auto it = ptildes_.find(key); it != ptildes_.end()) {
        return it->second;
    }
    const double p = ptilde_light(s.batch, *f.one_sender, cfg.beta, opts_.solver);
    ptildes_.emplace(key, p);
    return p;
}

DelayInputs AnalyticModel::delay_inputs(const NetworkConfig& cfg) {
    const std::string key = sensor_key(cfg);
    auto it = post_moments_.find(key);
    if (it == post_moments_.end()) {
        const auto post = increment_law({cfg.increment_kind(), Regime::PostChange});
        it = post_moments_.emplace(key, std::make_pair(post->mean(), post->variance())).first;
    }
    DelayInputs d;
    d.drift = it->second.first;
    d.variance = it->second.second;
    d.fusion_drifts = drifts(cfg);
    d.gamma = cfg.gamma;
    d.beta = cfg.beta;
    d.sensors = cfg.sensors;
    return d;
}

PerfReport AnalyticModel::evaluate(const NetworkConfig& cfg) {
    cfg.validate();
    const SensorSummary& s = sensor(cfg);
    const FusionSummary& f = fusion(cfg);

    PerfReport r;
    r.method = PerfReport::Method::Analytical;
    r.config_hash = cfg.hash();
    r.lambda_gamma = s.fpt.lambda_gamma;
    r.lambda0 = f.lambda0;
    r.mean_overshoot = s.overshoot.mean;
    r.mean_batch = s.batch.mean;

    if (s.heavy_batch) {
        const auto ex = exceedance_model(cfg.sensors, s.fpt, s.batch);
        r.ptilde = ptilde_heavy(s.batch, f.drifts, minimum_senders(f.drifts), cfg.beta, ex);
    } else {
        r.ptilde = light_ptilde(cfg, s, f);
    }

    double pre_slots = 0.0;
    if (!std::isfinite(f.lambda0)) {
        r.pfa = 1.0;
        r.warnings.push_back("noise-only fusion drift is non-negative");
        pre_slots = cfg.fixed_change_time ? static_cast<double>(std::max<std::int64_t>(0, *cfg.fixed_change_time - 1)) : (1.0 - cfg.rho) / cfg.rho;
    } else if (cfg.fixed_change_time) {
        const double rate = f.lambda0 + s.fpt.lambda_gamma * cfg.sensors * r.ptilde;
        pre_slots = static_cast<double>(std::max<std::int64_t>(0, *cfg.fixed_change_time - 1));
        r.pfa = -std::expm1(-rate * pre_slots);
    } else {
        r.pfa = pfa_geometric({s.fpt.lambda_gamma, f.lambda0, r.ptilde, cfg.sensors, cfg.rho});
        pre_slots = (1.0 - cfg.rho) / cfg.rho;
    }

    DelayBreakdown delay;
    try {
        delay = edd_breakdown(delay_inputs(cfg));
    } catch (const InfeasibleError& e) {
        delay.edd = std::numeric_limits<double>::infinity();
        r.edd_feasible = false;
        r.warnings.push_back(e.what());
    }
    r.edd = delay.edd;
    r.energy = analytic_energy(cfg.b, s.fpt.lambda_gamma, s.batch.mean, pre_slots, delay);
    return r;
}

PerfReport analyze(const NetworkConfig& cfg, const AnalyticOptions& opts) {
    AnalyticModel model(opts);
    return model.evaluate(cfg);
}

}  // namespace dualcusum
