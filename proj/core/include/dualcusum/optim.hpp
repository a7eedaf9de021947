#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dualcusum/config.hpp"
#include "dualcusum/perf.hpp"

namespace dualcusum {

/// Evenly spaced grid on [lo, hi]; integer ranges step by whole numbers.
struct ParameterRange {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t points = 1;
    bool integer = false;

    std::vector<double> values() const;
    double step() const;
};

struct ConstraintSpec {
    double alpha = 1e-3;
    double energy_budget = 5.0;
    ParameterRange beta{5.0, 40.0, 8};
    ParameterRange gamma{2.0, 16.0, 8};
    ParameterRange b{0.2, 1.0, 5};
    ParameterRange I{1.0, 5.0, 5, true};
    int refinements = 2;  // local passes with halved steps

    void validate() const;
};

struct EvaluatedPoint {
    double beta = 0.0;
    double gamma = 0.0;
    double b = 0.0;
    double I = 0.0;
    double pfa = 0.0;
    double edd = 0.0;
    double energy = 0.0;
    bool feasible = false;
    std::string note;  // evaluation failure, if any
};

struct OptResult {
    bool feasible = false;
    NetworkConfig best;
    PerfReport report;  // analytical report at the optimum (or nearest violation)
    std::vector<EvaluatedPoint> log;
    std::string diagnostics;

    std::string log_csv() const;
    std::string to_json() const;
};

/// Grid search of the analytical E_DD over (beta, gamma, b, I) subject to
/// analytical P_FA <= alpha and energy <= E_0, followed by local refinements
/// around the incumbent with halved steps. Ties are broken by evaluation order,
/// so identical inputs give identical optima.
OptResult optimize(const NetworkConfig& tmpl, const ConstraintSpec& constraints, AnalyticModel& model);
OptResult optimize(const NetworkConfig& tmpl, const ConstraintSpec& constraints,
                   const AnalyticOptions& opts = {});

struct ValidationReport {
    PerfReport analytic;
    PerfReport simulated;
    bool pfa_violated = false;     // simulated P_FA above alpha beyond its CI
    bool energy_violated = false;  // simulated energy above E_0 beyond its CI
    bool validation_failure = false;
    double edd_relative_gap = 0.0;  // (analytic - simulated) / simulated
};

/// Simulates the optimum with the replication count and seed of `sim`.
ValidationReport validate(const OptResult& opt, const ConstraintSpec& constraints, const NetworkConfig& sim);

}  // namespace dualcusum
