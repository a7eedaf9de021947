#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dualcusum/config.hpp"
#include "dualcusum/optim.hpp"

namespace dualcusum {

enum class RecipeKind { MeanFpt, Pfa, EddCompare, EddAnalysis, OvershootCcdf, BatchCcdf, ParamVsNonparam, Custom };

std::string_view to_string(RecipeKind kind);
RecipeKind parse_recipe_kind(std::string_view name);

/// How sensor laws are built for a family. Without explicit f0/f1 the
/// pre-change increment law is moment matched to (pre_mean, variance) and the
/// post-change law is the same law moved to post_mean, used directly as
/// X - D with D = 0. With f0/f1 the observation laws are the base families
/// with those (p1, p2) parameters and D defaults to the midpoint of their means.
struct SensorLawSpec {
    SensorKind mode = SensorKind::Nonparametric;
    Family family = Family::Gaussian;
    double pre_mean = -0.3;
    double variance = 1.0;
    double post_mean = 0.3;
    std::optional<double> shape;  // Pareto K
    double log_std = 0.7;          // lognormal log-std
    std::optional<std::pair<double, double>> f0;
    std::optional<std::pair<double, double>> f1;
    std::optional<double> D;

    void apply(NetworkConfig& cfg, Family f) const;
};

struct PfaRow {
    Family family = Family::Gaussian;
    int sensors = 5;
    double I = 2.0;
    double gamma = 15.0;
    double beta = 18.0;
};

struct EddCase {
    double rho = 5e-4;
    double alpha = 1e-2;
};

struct ComparisonRow {
    Family family = Family::Pareto;
    std::pair<double, double> f0{7.0, 1.0};
    std::pair<double, double> f1{3.0, 1.0};
    int sensors = 5;
    double I = 4.0;
};

struct ExperimentRecipe {
    RecipeKind kind = RecipeKind::Custom;
    std::string name;
    NetworkConfig network;
    SensorLawSpec sensor;
    std::vector<double> gammas;
    std::vector<Family> families;
    std::vector<PfaRow> rows;
    std::vector<EddCase> cases;
    std::vector<ComparisonRow> comparisons;
    ConstraintSpec constraints;
    AnalyticOptions analytic;
    std::uint64_t oracle_runs = 0;
    std::size_t excursions = 100000;
    std::size_t crossings = 100000;
    std::size_t points = 60;
    bool simulate = true;
    /// Every key with its effective value (defaults included), as config text.
    std::string effective_config;

    /// Template config for one family.
    NetworkConfig for_family(Family f) const;
};

/// Keys given on the command line, "section.key" -> value, applied after the file.
using ConfigOverrides = std::map<std::string, std::string>;

/// Flat "[section]" / "key = value" text. '#' starts a comment anywhere
/// after whitespace, ';' only at the start of a line. Unknown
/// keys, bad values and missing required keys raise ConfigError naming the key
/// and its line.
ExperimentRecipe parse_config_text(const std::string& text, const std::string& origin = "<config>",
                                   const ConfigOverrides& overrides = {});
ExperimentRecipe parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// The accepted keys with their defaults, as commented config text.
std::string config_reference();

struct RecipeOutput {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> warnings;
    bool precision_warning = false;
};

/// Runs the recipe, writing <name>.csv (plus recipe-specific extras) and the
/// <name>.meta.ini sidecar into `outdir`. The sidecar is itself a valid config
/// that reproduces the CSV. Progress lines go to `log` when given.
RecipeOutput run_recipe(const ExperimentRecipe& recipe, const std::filesystem::path& outdir,
                        std::ostream* log = nullptr);

}  // namespace dualcusum
