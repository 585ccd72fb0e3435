// Command-line front end for scenario runs.

#include "stormrtc/error.hpp"
#include "stormrtc/scenario.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace stormrtc;

namespace {

void print_summary(const ScenarioResult& r)
{
    const auto& L = r.watershed.ledger;
    fmt::print("watershed: {} steps, min dt {:.3f} s, rain {:.1f} m3, outflow {:.1f} m3, ledger residual {:.3e}\n",
               r.watershed.steps, r.watershed.min_dt, L.rain, L.outflow, L.worst_relative_residual);
    fmt::print("outputs written to {}\n", r.output_dir.string());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Coupled watershed / detention-pond simulator with model-predictive valve and gate control"};
    app.require_subcommand(1);

    std::string config, dir, strategy;

    auto* run = app.add_subcommand("run", "Simulate the watershed and every strategy, then write the report");
    run->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);

    auto* ws = app.add_subcommand("watershed", "Simulate the watershed only and write hydrograph.csv");
    ws->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);

    auto* control = app.add_subcommand("control", "Simulate the watershed and one strategy");
    control->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);
    control->add_option("--strategy", strategy, "Strategy name, e.g. mpc or static_50")->required();

    auto* report = app.add_subcommand("report", "Recompute report.csv from the traces in an output directory");
    report->add_option("dir", dir, "Output directory")->required()->check(CLI::ExistingDirectory);

    auto* validate = app.add_subcommand("validate", "Check a scenario file and list every problem");
    validate->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto problems = validate_scenario(config);
            if (problems.empty()) {
                fmt::print("{}: ok\n", config);
                return 0;
            }
            for (const auto& p : problems)
                fmt::print(stderr, "{}\n", p);
            return 1;
        }
        if (*report) {
            const auto text = report_from_directory(dir);
            std::ofstream(fs::path(dir) / "report.csv", std::ios::binary) << text;
            std::cout << text;
            return 0;
        }
        const auto cfg = load_scenario(config);
        if (*ws) {
            const auto out = resolve_output_dir(cfg);
            fs::create_directories(out);
            const auto w = run_watershed(cfg);
            write_hydrograph(out / "hydrograph.csv", w.series);
            fmt::print("watershed: {} steps, rain {:.1f} m3, outflow {:.1f} m3; wrote {}\n", w.steps, w.ledger.rain,
                       w.ledger.outflow, (out / "hydrograph.csv").string());
            return 0;
        }
        const auto result = run_scenario(cfg, *control ? std::optional<std::string>(strategy) : std::nullopt);
        print_summary(result);
        return 0;
    } catch (const InvalidInput& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "failure: {}\n", e.what());
        return 3;
    }
}
