#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "dualcusum/batch.hpp"
#include "dualcusum/config.hpp"
#include "dualcusum/renewal.hpp"

namespace dualcusum {

struct FalseAlarmInputs {
    double lambda_gamma = 0.0;
    double lambda0 = 0.0;
    double ptilde = 0.0;
    int sensors = 1;
    double rho = 0.005;

    void validate() const;
};

/// P_FA for T ~ Geom(rho) with exponential alarm clock of rate
/// lambda0 + lambda_gamma * L * ptilde per slot.
double pfa_geometric(const FalseAlarmInputs& in);

/// Within-batch false alarm for non-overlapping batches: sum_i P(eta = i) P(tau_beta <= i)
/// with tau_beta the fusion first passage under one transmitting sensor.
/// Throws PrecisionError when the batch law leaves more than 1e-3 beyond its horizon.
double ptilde_light(const BatchLaw& batch, const IncrementLaw& one_sender, double beta,
                    const SolverOptions& opts = {});

/// Within-batch false alarm for overlapping heavy-tailed batches. A tagged batch
/// raises an alarm when it lasts at least d = ceil(beta / mu_m) slots and at
/// least m - 1 batches of the other L - 1 sensors start early enough inside it
/// to overlap it for d slots while lasting d slots themselves. The other
/// sensors start batches as independent Poisson streams of rate lambda_gamma.
double ptilde_heavy(const BatchLaw& batch, const std::vector<double>& fusion_drifts, int m_star,
                    double beta, const ExceedanceModel& exceedances);

/// Rate of the noise-only fusion alarm, 1 / E[tau_beta] with no sender.
/// Returns 0 when the no-sender fusion increment is a.s. non-positive constant.
double lambda0(const IncrementLaw& no_sender, double beta, const SolverOptions& opts = {});

/// m(k, x) = sum_{i >= 0} P(tau_x > i)^k with tau_x ~ N(x/mu, var*x/mu^3).
double mean_min_fpt(int k, double x, double drift, double variance);

struct DelayInputs {
    double drift = 0.3;     // post-change sensor increment mean
    double variance = 1.0;  // post-change sensor increment variance
    std::vector<double> fusion_drifts;  // mu_l for l = 0..L
    double gamma = 15.0;
    double beta = 15.0;
    int sensors = 10;

    int m_star() const;  // min l with mu_l > 0, or -1
};

struct DelayBreakdown {
    double edd = 0.0;
    int j = 0;                   // epoch after which F_k crosses beta
    std::vector<double> levels;  // gamma_l, l = 1..L (index l-1)
    std::vector<double> gaps;    // m(l, gamma_l) after clamping, l = 1..L
    std::vector<double> epochs;  // E[t_i], i = 1..L
    std::vector<double> fbar;    // mean F_k before t_i, i = 1..L
};

/// Transition-epoch recursion for the mean detection delay.
/// Throws InfeasibleError when no epoch reaches beta with positive drift.
DelayBreakdown edd_breakdown(const DelayInputs& in);
double edd_approx(const DelayInputs& in);

/// Law of the fusion increment when `senders` sensors transmit b.
IncrementLawPtr fusion_increment_law(const NetworkConfig& cfg, int senders, std::size_t samples = 200000,
                                     std::uint64_t seed = 7);
/// Means of fusion_increment_law for l = 0..L.
std::vector<double> fusion_drifts(const NetworkConfig& cfg);
int minimum_senders(const std::vector<double>& drifts);

struct PerfReport {
    enum class Method { Analytical, Simulated };

    Method method = Method::Analytical;
    std::string config_hash;
    double pfa = 0.0;
    double edd = 0.0;
    double energy = 0.0;
    // Simulated only: 95% half-widths and run accounting.
    double pfa_ci = 0.0;
    double edd_ci = 0.0;
    double energy_ci = 0.0;
    double edd_conditional = 0.0;  // E[tau - T | tau >= T]
    std::uint64_t replications = 0;
    std::uint64_t false_alarms = 0;
    std::uint64_t censored = 0;
    // Analytical only: intermediate quantities.
    double lambda_gamma = 0.0;
    double lambda0 = 0.0;
    double ptilde = 0.0;
    double mean_overshoot = 0.0;
    double mean_batch = 0.0;
    bool edd_feasible = true;
    std::vector<std::string> warnings;

    static std::string csv_header();
    std::string csv_row() const;
    std::string to_json() const;
};

std::string_view to_string(PerfReport::Method m);

/// Pre-change summary of one sensor at threshold gamma.
struct SensorSummary {
    FptLaw fpt;
    OvershootLaw overshoot;
    BatchLaw batch;
    double drift = 0.0;
    double variance = 0.0;
    TailClass tail = TailClass::Light;
    bool heavy_batch = false;  // Monte Carlo batch law and overlap-based ptilde
};

struct AnalyticOptions {
    SolverOptions solver{};
    std::size_t batch_replications = 20000;
    std::size_t overshoot_crossings = 20000;
    std::uint64_t seed = 1;
};

/// Evaluates the analytical P_FA, E_DD and energy of a configuration.
/// Sensor-side quantities are cached per (increment law, gamma) and fusion
/// quantities per (noise, b, I, beta, L), so grid searches stay cheap.
/// Not thread safe.
class AnalyticModel {
public:
    explicit AnalyticModel(AnalyticOptions opts = {});

    PerfReport evaluate(const NetworkConfig& cfg);
    const SensorSummary& sensor(const NetworkConfig& cfg);
    DelayInputs delay_inputs(const NetworkConfig& cfg);

private:
    struct FusionSummary {
        std::string key;
        std::vector<double> drifts;
        double lambda0 = 0.0;
        IncrementLawPtr one_sender;
    };
    const FusionSummary& fusion(const NetworkConfig& cfg);
    const std::vector<double>& drifts(const NetworkConfig& cfg);
    double light_ptilde(const NetworkConfig& cfg, const SensorSummary& s, const FusionSummary& f);

    AnalyticOptions opts_;
    std::map<std::string, SensorSummary> sensors_;
    std::map<std::string, FusionSummary> fusions_;
    std::map<std::string, double> ptildes_;
    std::map<std::string, std::vector<double>> drifts_;
    std::map<std::string, std::pair<double, double>> post_moments_;
};

/// b^2 times the expected transmitting slots of an average sensor up to the
/// stopping time: lambda_gamma * E[eta] per pre-change slot, then from each
/// transition epoch to the alarm.
double analytic_energy(double b, double lambda_gamma, double mean_batch, double pre_change_slots,
                       const DelayBreakdown& delay);

PerfReport analyze(const NetworkConfig& cfg, const AnalyticOptions& opts = {});

}  // namespace dualcusum
