#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualcusum/dist.hpp"

namespace dualcusum {

/// Values on the uniform grid s_i = i*h, i = 0..n, covering [0, gamma].
struct GridFunction {
    double gamma = 0.0;
    double h = 0.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double node(std::size_t i) const { return static_cast<double>(i) * h; }
    /// Linear interpolation; s is clamped to [0, gamma].
    double at(double s) const;
};

/// Limiting exponential law of the first passage time from W = 0.
struct FptLaw {
    double lambda_gamma = 0.0;  // 1 / mean_fpt
    double mean_fpt = 0.0;
    std::vector<double> survival;  // P(tau > n), n = 0..N, optional
};

struct OvershootLaw {
    enum class Model { ExponentialFit, Empirical };

    double mean = 0.0;
    Model model = Model::ExponentialFit;
    std::vector<double> samples;  // sorted, Empirical only

    double ccdf(double x) const;
};

struct SolverOptions {
    std::size_t intervals = 400;    // grid nodes = intervals + 1
    double residual_tolerance = 1e-6;
};

/// Discretized renewal operator on [0, threshold]:
///   (K v)(s) = F_Z(-s) v(0) + integral over y in [0, threshold] of v(y) dF_Z(y - s)
/// with v taken piecewise linear between nodes. Each cell integral is exact
/// for the linear interpolant because it only needs F_Z and its
/// antiderivative, so laws with atoms or density jumps are handled without
/// quadrature bias. Mass below 0 and above the threshold enters through
/// exact F_Z evaluations.
class RenewalKernel {
public:
    RenewalKernel(const IncrementLaw& law, double threshold, std::size_t intervals);

    const Eigen::MatrixXd& matrix() const { return k_; }
    double threshold() const { return threshold_; }
    double h() const { return h_; }
    std::size_t nodes() const { return static_cast<std::size_t>(k_.rows()); }

private:
    double threshold_;
    double h_;
    Eigen::MatrixXd k_;
};

struct MeanFptSolution {
    GridFunction L;
    FptLaw law;
    double residual = 0.0;
    std::vector<std::string> warnings;
};

/// Solves L(s) = 1 + F_Z(-s) L(0) + integral_{-s}^{gamma-s} L(s+z) dF_Z(z).
/// Requires E[Z] < 0 (throws DivergenceError otherwise).
MeanFptSolution solve_mean_fpt(const IncrementLaw& law, double gamma, const SolverOptions& opts = {});

/// Q_n(0) = P(tau > n | W_0 = 0) for n = 0..horizon, via
/// Q_{n+1}(s) = F_Z(-s) Q_n(0) + integral Q_n(s+z) dF_Z(z), Q_0 = 1.
std::vector<double> solve_fpt_survival(const IncrementLaw& law, double threshold,
                                       std::size_t horizon, const SolverOptions& opts = {});

struct MeanOvershootSolution {
    GridFunction R;
    double mean = 0.0;  // R(0)
    double residual = 0.0;
    std::vector<std::string> warnings;
};

/// Solves R(x) = E[(Z - (gamma - x))^+] + integral_0^gamma R(y) dF_Z(y - x) + R(0) F_Z(-x).
/// Throws InfeasibleError when the conditional excess mean is infinite.
MeanOvershootSolution solve_mean_overshoot(const IncrementLaw& law, double gamma,
                                           const SolverOptions& opts = {});

struct OvershootMonteCarlo {
    std::size_t crossings = 100000;
    std::uint64_t seed = 1;
};

/// Light tails with positive variance: exponential law with rate 1/E[overshoot].
/// Heavy tails or degenerate increments: empirical law from simulated crossings.
OvershootLaw overshoot_law(const IncrementLaw& law, TailClass tail, double gamma,
                           const SolverOptions& opts = {}, const OvershootMonteCarlo& mc = {});

/// Simulated overshoots at the first passage from 0 (sorted).
std::vector<double> simulate_overshoots(const IncrementLaw& law, double gamma, std::size_t crossings,
                                        std::uint64_t seed);

}  // namespace dualcusum
