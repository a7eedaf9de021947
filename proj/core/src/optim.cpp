#include "dualcusum/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "dualcusum/errors.hpp"
#include "dualcusum/sim.hpp"

namespace dualcusum {

std::vector<double> ParameterRange::values() const {
    std::vector<double> out;
    if (points <= 1 || hi == lo) {
        out.push_back(integer ? std::round(lo) : lo);
        return out;
    }
    for (std::size_t i = 0; i < points; ++i) {
        double v = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        if (integer) {
            v = std::round(v);
        }
        if (out.empty() || v != out.back()) {
            out.push_back(v);
        }
    }
    return out;
}

double ParameterRange::step() const {
    if (points <= 1) {
        return 0.0;
    }
    const double s = (hi - lo) / static_cast<double>(points - 1);
    return integer ? std::max(1.0, std::round(s)) : s;
}

void ConstraintSpec::validate() const {
    if (!(alpha > 0 && alpha < 1)) {
        if (alpha != 1.0) {
            throw ConfigError("alpha must lie in (0,1]");
        }
    }
    if (!(energy_budget > 0)) {
        throw ConfigError("energy budget must be > 0");
    }
    for (const auto* r : {&beta, &gamma, &b, &I}) {
        if (r->points < 1 || r->hi < r->lo) {
            throw ConfigError("search ranges must be nonempty");
        }
    }
    if (!(beta.lo > 0) || !(gamma.lo > 0) || !(I.lo > 0) || b.lo < 0) {
        throw ConfigError("search ranges must respect parameter domains");
    }
}

namespace {

using Key = std::tuple<double, double, double, double>;

struct Search {
    const NetworkConfig& tmpl;
    const ConstraintSpec& c;
    AnalyticModel& model;
    OptResult result;
    std::set<Key> seen;
    int incumbent = -1;

    // Violation used to rank infeasible points: relative excess over the worse constraint.
    static double violation(const EvaluatedPoint& p, const ConstraintSpec& c) {
        if (!p.note.empty()) {
            return std::numeric_limits<double>::infinity();
        }
        const double v_pfa = p.pfa / c.alpha - 1.0;
        const double v_energy = p.energy / c.energy_budget - 1.0;
        double v = std::max({0.0, v_pfa, v_energy});
        if (!std::isfinite(p.edd)) {
            v = std::max(v, 1e6);
        }
        return v;
    }

    NetworkConfig at(const EvaluatedPoint& p) const {
        NetworkConfig cfg = tmpl;
        cfg.beta = p.beta;
        cfg.gamma = p.gamma;
        cfg.b = p.b;
        cfg.I = p.I;
        cfg.energy_budget = c.energy_budget;
        return cfg;
    }

    void evaluate(double beta, double gamma, double b, double I) {
        const Key key{beta, gamma, b, I};
        if (!seen.insert(key).second) {
            return;
        }
        EvaluatedPoint p{beta, gamma, b, I};
        try {
            const PerfReport r = model.evaluate(at(p));
            p.pfa = r.pfa;
            p.edd = r.edd;
            p.energy = r.energy;
            p.feasible = std::isfinite(r.edd) && r.pfa <= c.alpha && r.energy <= c.energy_budget;
        } catch (const Error& e) {
            p.note = e.what();
            p.pfa = std::numeric_limits<double>::quiet_NaN();
            p.edd = std::numeric_limits<double>::infinity();
            p.energy = std::numeric_limits<double>::quiet_NaN();
        }
        result.log.push_back(p);
        const int idx = static_cast<int>(result.log.size()) - 1;
        if (p.feasible && (incumbent < 0 || !result.log[static_cast<std::size_t>(incumbent)].feasible ||
                           p.edd < result.log[static_cast<std::size_t>(incumbent)].edd)) {
            incumbent = idx;
        }
    }

    void grid(const std::vector<double>& betas, const std::vector<double>& gammas, const std::vector<double>& bs,
              const std::vector<double>& Is) {
        for (double g : gammas) {
            for (double I : Is) {
                for (double b : bs) {
                    for (double beta : betas) {
                        evaluate(beta, g, b, I);
                    }
                }
            }
        }
    }
};

std::vector<double> around(double x, double step, const ParameterRange& r) {
    std::vector<double> out;
    if (step <= 0) {
        return {x};
    }
    for (double v : {x - step, x, x + step}) {
        if (r.integer) {
            v = std::round(v);
        }
        if (v >= r.lo - 1e-12 && v <= r.hi + 1e-12 && (out.empty() || v != out.back())) {
            out.push_back(v);
        }
    }
    return out;
}

}  // namespace

OptResult optimize(const NetworkConfig& tmpl, const ConstraintSpec& constraints, AnalyticModel& model) {
    constraints.validate();
    Search s{tmpl, constraints, model, {}, {}, -1};
    s.grid(constraints.beta.values(), constraints.gamma.values(), constraints.b.values(), constraints.I.values());

    double sb = constraints.beta.step();
    double sg = constraints.gamma.step();
    double sbb = constraints.b.step();
    double si = constraints.I.step();
    for (int pass = 0; pass < constraints.refinements && s.incumbent >= 0; ++pass) {
        sb /= 2;
        sg /= 2;
        sbb /= 2;
        si = std::max(1.0, std::round(si / 2));
        const EvaluatedPoint best = s.result.log[static_cast<std::size_t>(s.incumbent)];
        s.grid(around(best.beta, sb, constraints.beta), around(best.gamma, sg, constraints.gamma),
               around(best.b, sbb, constraints.b), around(best.I, si, constraints.I));
    }

    OptResult& out = s.result;
    if (s.incumbent >= 0) {
        out.feasible = true;
        const auto& p = out.log[static_cast<std::size_t>(s.incumbent)];
        out.best = s.at(p);
        out.report = model.evaluate(out.best);
        return std::move(out);
    }

    // Empty feasible set: report the point with the smallest violation.
    std::size_t nearest = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.log.size(); ++i) {
        const double v = Search::violation(out.log[i], constraints);
        if (v < best_v) {
            best_v = v;
            nearest = i;
        }
    }
    out.feasible = false;
    if (!out.log.empty()) {
        const auto& p = out.log[nearest];
        out.best = s.at(p);
        std::ostringstream os;
        os << "no feasible point; nearest violation at beta=" << format_number(p.beta)
           << " gamma=" << format_number(p.gamma) << " b=" << format_number(p.b) << " I=" << format_number(p.I)
           << " pfa=" << format_number(p.pfa) << " (alpha " << format_number(constraints.alpha) << ")"
           << " energy=" << format_number(p.energy) << " (budget " << format_number(constraints.energy_budget)
           << ")";
        out.diagnostics = os.str();
        try {
            out.report = model.evaluate(out.best);
        } catch (const Error&) {
        }
    }
    return std::move(out);
}

OptResult optimize(const NetworkConfig& tmpl, const ConstraintSpec& constraints, const AnalyticOptions& opts) {
    AnalyticModel model(opts);
    return optimize(tmpl, constraints, model);
}

std::string OptResult::log_csv() const {
    std::ostringstream os;
    os << "beta,gamma,b,I,pfa,edd,energy,feasible,note\n";
    for (const auto& p : log) {
        os << format_number(p.beta) << "," << format_number(p.gamma) << "," << format_number(p.b) << ","
           << format_number(p.I) << "," << format_number(p.pfa) << "," << format_number(p.edd) << ","
           << format_number(p.energy) << "," << (p.feasible ? 1 : 0) << ",\"" << p.note << "\"\n";
    }
    return os.str();
}

std::string OptResult::to_json() const {
    nlohmann::json j;
    j["feasible"] = feasible;
    j["beta"] = best.beta;
    j["gamma"] = best.gamma;
    j["b"] = best.b;
    j["I"] = best.I;
    j["pfa"] = report.pfa;
    j["edd"] = std::isfinite(report.edd) ? nlohmann::json(report.edd) : nlohmann::json(nullptr);
    j["energy"] = std::isfinite(report.energy) ? nlohmann::json(report.energy) : nlohmann::json(nullptr);
    j["evaluated_points"] = log.size();
    j["diagnostics"] = diagnostics;
    return j.dump(2);
}

ValidationReport validate(const OptResult& opt, const ConstraintSpec& constraints, const NetworkConfig& sim) {
    NetworkConfig cfg = opt.best;
    cfg.replications = sim.replications;
    cfg.seed = sim.seed;
    cfg.threads = sim.threads;
    cfg.horizon_cap = sim.horizon_cap;
    cfg.fixed_change_time = sim.fixed_change_time;
    cfg.stop_at_change = false;

    ValidationReport v;
    v.analytic = opt.report;
    v.simulated = estimate(cfg);
    v.pfa_violated = v.simulated.pfa - v.simulated.pfa_ci > constraints.alpha;
    v.energy_violated = v.simulated.energy - v.simulated.energy_ci > constraints.energy_budget;
    v.validation_failure = v.pfa_violated || v.energy_violated || !opt.feasible;
    if (v.simulated.edd > 0) {
        v.edd_relative_gap = (v.analytic.edd - v.simulated.edd) / v.simulated.edd;
    }
    return v;
}

}  // namespace dualcusum
