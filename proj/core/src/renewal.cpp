#include "dualcusum/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dualcusum/errors.hpp"
#include "dualcusum/excursion.hpp"

namespace dualcusum {

namespace {

constexpr std::size_t kMinRecommendedNodes = 200;

void check_grid(double threshold, std::size_t intervals) {
    if (!(threshold > 0) || !std::isfinite(threshold)) {
        throw ConfigError("renewal threshold must be finite and > 0");
    }
    if (intervals < 2) {
        throw ConfigError("renewal grid needs at least 2 intervals");
    }
}

std::vector<std::string> grid_warnings(std::size_t intervals) {
    std::vector<std::string> w;
    if (intervals + 1 < kMinRecommendedNodes) {
        std::ostringstream os;
        os << "coarse grid: " << intervals + 1 << " nodes (< " << kMinRecommendedNodes << ")";
        w.push_back(os.str());
    }
    return w;
}

GridFunction to_grid(const Eigen::VectorXd& v, double gamma, double h) {
    GridFunction g;
    g.gamma = gamma;
    g.h = h;
    g.values.assign(v.data(), v.data() + v.size());
    return g;
}

double relative_residual(const Eigen::MatrixXd& k, const Eigen::VectorXd& x, const Eigen::VectorXd& f) {
    const Eigen::VectorXd r = x - k * x - f;
    return r.cwiseAbs().maxCoeff() / std::max(1e-300, x.cwiseAbs().maxCoeff());
}

// Direct dense solve of (I - K) x = f. The kernel is sub-stochastic under
// negative drift but its spectral radius is 1 - O(1/L(0)), far too close to 1
// for plain successive substitution at the thresholds of interest.
Eigen::VectorXd solve_fixed_point(const Eigen::MatrixXd& k, const Eigen::VectorXd& f) {
    const auto n = k.rows();
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - k;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Eigen::VectorXd x = lu.solve(f);
    // One step of iterative refinement.
    const Eigen::VectorXd r = f - a * x;
    x += lu.solve(r);
    return x;
}

}  // namespace

double GridFunction::at(double s) const {
    if (values.empty()) {
        return 0.0;
    }
    const double c = std::clamp(s, 0.0, gamma);
    const double pos = c / h;
    const auto i = std::min(static_cast<std::size_t>(pos), values.size() - 1);
    if (i + 1 >= values.size()) {
        return values.back();
    }
    const double t = pos - static_cast<double>(i);
    return (1.0 - t) * values[i] + t * values[i + 1];
}

double OvershootLaw::ccdf(double x) const {
    if (x < 0) {
        return 1.0;
    }
    if (model == Model::ExponentialFit) {
        return mean > 0 ? std::exp(-x / mean) : 0.0;
    }
    if (samples.empty()) {
        return 0.0;
    }
    const auto k = std::upper_bound(samples.begin(), samples.end(), x) - samples.begin();
    return 1.0 - static_cast<double>(k) / static_cast<double>(samples.size());
}

RenewalKernel::RenewalKernel(const IncrementLaw& law, double threshold, std::size_t intervals)
    : threshold_(threshold), h_(threshold / static_cast<double>(intervals)) {
    check_grid(threshold, intervals);
    const auto n = static_cast<Eigen::Index>(intervals + 1);
    k_ = Eigen::MatrixXd::Zero(n, n);

    // Antiderivative of F_Z at every difference y_j - s_i = (j - i) h. These
    // depend on j - i only, so precompute them once.
    const auto span = 2 * n - 1;
    std::vector<double> g(static_cast<std::size_t>(span));
    std::vector<double> f(static_cast<std::size_t>(span));
    for (Eigen::Index d = -(n - 1); d <= n - 1; ++d) {
        const double z = static_cast<double>(d) * h_;
        g[static_cast<std::size_t>(d + n - 1)] = law.cdf_antiderivative(z);
        f[static_cast<std::size_t>(d + n - 1)] = law.cdf(z);
    }
    auto at = [&](const std::vector<double>& v, Eigen::Index d) { return v[static_cast<std::size_t>(d + n - 1)]; };

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j + 1 < n; ++j) {
            const Eigen::Index da = j - i;
            const Eigen::Index db = j + 1 - i;
            const double cell = (at(g, db) - at(g, da)) / h_;
            k_(i, j) += cell - at(f, da);
            k_(i, j + 1) += at(f, db) - cell;
        }
        // Reflection at zero: every z <= -s lands on W = 0. The cell loop
        // above starts at y = 0 i.e. z = -s, so the atom at -s is counted here.
        k_(i, 0) += law.cdf(-static_cast<double>(i) * h_);
    }
}

MeanFptSolution solve_mean_fpt(const IncrementLaw& law, double gamma, const SolverOptions& opts) {
    check_grid(gamma, opts.intervals);
    if (!(law.mean() < 0.0)) {
        throw DivergenceError("mean first passage time requires negative drift");
    }
    RenewalKernel kernel(law, gamma, opts.intervals);
    const auto n = static_cast<Eigen::Index>(kernel.nodes());
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd l = solve_fixed_point(kernel.matrix(), ones);

    MeanFptSolution out;
    out.L = to_grid(l, gamma, kernel.h());
    out.residual = relative_residual(kernel.matrix(), l, ones);
    out.warnings = grid_warnings(opts.intervals);
    if (!(l(0) > 0) || !std::isfinite(l(0))) {
        throw DivergenceError("mean first passage solve did not produce a positive finite L(0)");
    }
    if (out.residual > opts.residual_tolerance) {
        std::ostringstream os;
        os << "mean FPT residual " << out.residual << " above tolerance";
        out.warnings.push_back(os.str());
    }
    out.law.mean_fpt = l(0);
    out.law.lambda_gamma = 1.0 / l(0);
    return out;
}

std::vector<double> solve_fpt_survival(const IncrementLaw& law, double threshold, std::size_t horizon,
                                       const SolverOptions& opts) {
    check_grid(threshold, opts.intervals);
    if (horizon < 1) {
        throw ConfigError("survival horizon must be >= 1");
    }
    RenewalKernel kernel(law, threshold, opts.intervals);
    const auto n = static_cast<Eigen::Index>(kernel.nodes());
    Eigen::VectorXd q = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd next(n);
    std::vector<double> out;
    out.reserve(horizon + 1);
    out.push_back(1.0);
    for (std::size_t step = 1; step <= horizon; ++step) {
        next.noalias() = kernel.matrix() * q;
        q.swap(next);
        out.push_back(std::clamp(q(0), 0.0, 1.0));
    }
    return out;
}

MeanOvershootSolution solve_mean_overshoot(const IncrementLaw& law, double gamma, const SolverOptions& opts) {
    check_grid(gamma, opts.intervals);
    if (!(law.mean() < 0.0)) {
        throw DivergenceError("mean overshoot requires negative drift");
    }
    RenewalKernel kernel(law, gamma, opts.intervals);
    const auto n = static_cast<Eigen::Index>(kernel.nodes());
    Eigen::VectorXd forcing(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) * kernel.h();
        const double e = law.excess_mean(gamma - s);
        if (!std::isfinite(e)) {
            throw InfeasibleError("conditional excess mean of the increment is infinite");
        }
        forcing(i) = e;
    }
    const Eigen::VectorXd r = solve_fixed_point(kernel.matrix(), forcing);

    MeanOvershootSolution out;
    out.R = to_grid(r, gamma, kernel.h());
    out.mean = r(0);
    out.residual = relative_residual(kernel.matrix(), r, forcing);
    out.warnings = grid_warnings(opts.intervals);
    return out;
}

std::vector<double> simulate_overshoots(const IncrementLaw& law, double gamma, std::size_t crossings,
                                        std::uint64_t seed) {
    // Wrap without ownership; the sampler only borrows the law for this call.
    if (law.variance() <= 0.0 && law.mean() <= 0.0) {
        throw InfeasibleError("deterministic non-positive increments never cross the threshold");
    }
    IncrementLawPtr borrowed(std::shared_ptr<const IncrementLaw>{}, &law);
    ExcursionSampler sampler(borrowed, gamma);
    Rng rng = make_stream(seed, 0x0e5);
    std::vector<double> out;
    out.reserve(crossings);
    for (std::size_t i = 0; i < crossings; ++i) {
        out.push_back(sampler.next_crossing(rng).overshoot);
    }
    std::sort(out.begin(), out.end());
    return out;
}

OvershootLaw overshoot_law(const IncrementLaw& law, TailClass tail, double gamma, const SolverOptions& opts,
                           const OvershootMonteCarlo& mc) {
    OvershootLaw out;
    const bool degenerate = law.variance() <= 0.0;
    if (tail == TailClass::Light && !degenerate) {
        out.mean = solve_mean_overshoot(law, gamma, opts).mean;
        out.model = OvershootLaw::Model::ExponentialFit;
        return out;
    }
    out.model = OvershootLaw::Model::Empirical;
    out.samples = simulate_overshoots(law, gamma, mc.crossings, mc.seed);
    double sum = 0.0;
    for (double x : out.samples) {
        sum += x;
    }
    out.mean = out.samples.empty() ? 0.0 : sum / static_cast<double>(out.samples.size());
    return out;
}

}  // namespace dualcusum
