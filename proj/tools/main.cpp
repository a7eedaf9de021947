#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dualcusum/errors.hpp"
#include "dualcusum/recipes.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kPrecision = 3 };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DualCUSUM analysis and simulation recipes"};
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> replications;
    std::string output_dir = ".";
    bool verbose = false;
    bool strict = false;
    bool reference = false;

    app.add_option("-c,--config", config, "experiment config file");
    app.add_option("--seed", seed, "override [experiment] seed");
    app.add_option("--replications", replications, "override [experiment] replications");
    app.add_option("-o,--output-dir", output_dir, "directory for CSV and sidecar files");
    app.add_flag("-v,--verbose", verbose, "print progress lines");
    app.add_flag("--strict", strict, "exit with code 3 on precision warnings");
    app.add_flag("--print-keys", reference, "print every config key with its default and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfig;
    }
    if (reference) {
        std::cout << dualcusum::config_reference();
        return kOk;
    }
    if (config.empty()) {
        std::cerr << "error: --config is required\n";
        return kConfig;
    }

    dualcusum::ConfigOverrides overrides;
    if (seed) {
        overrides["experiment.seed"] = std::to_string(*seed);
    }
    if (replications) {
        overrides["experiment.replications"] = std::to_string(*replications);
    }

    dualcusum::ExperimentRecipe recipe;
    try {
        recipe = dualcusum::parse_config(config, overrides);
    } catch (const dualcusum::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    }

    try {
        const auto out = dualcusum::run_recipe(recipe, output_dir, verbose ? &std::cerr : nullptr);
        for (const auto& f : out.files) {
            std::cout << f.string() << "\n";
        }
        for (const auto& w : out.warnings) {
            std::cerr << "warning: " << w << "\n";
        }
        if (strict && out.precision_warning) {
            return kPrecision;
        }
    } catch (const dualcusum::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kOk;
}
