#pragma once

#include "stormrtc/forcing.hpp"
#include "stormrtc/hydrology.hpp"
#include "stormrtc/mpc.hpp"
#include "stormrtc/reservoir.hpp"
#include "stormrtc/routing.hpp"
#include "stormrtc/synthetic.hpp"
#include "stormrtc/terrain.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stormrtc {

/// Parsed scenario file. Relative paths are resolved against the file's directory.
struct ScenarioConfig {
    std::filesystem::path source;
    std::string name;
    double start = 0.0;       ///< epoch seconds
    double duration_s = 0.0;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;

    // terrain
    std::optional<ValleySpec> valley;
    std::filesystem::path dem_path;
    std::optional<CellIndex> outlet;
    double min_slope = 1e-3;
    std::optional<double> outlet_slope;

    // land use: either uniform n or a class raster with n per class
    double manning_n = 0.03;
    /// Share of cells scattered as sealed urban cover (uniform land use only).
    double impervious_fraction = 0.0;
    double impervious_manning_n = 0.015;
    double impervious_h0_m = 0.002;
    std::filesystem::path land_use_path;
    std::map<int, double> manning_by_class;

    // soil: either uniform or a class raster with a parameter table
    SoilParams soil;
    std::filesystem::path soil_class_path;
    std::filesystem::path soil_table_path;

    double cfl = 0.5;
    double dt_min_s = 0.1;
    double dt_max_s = 60.0;

    // rainfall: design storms or a gauge manifest
    std::vector<std::pair<double, DesignStormSpec>> storms;
    std::filesystem::path gauge_manifest;
    double idw_exponent = 2.0;

    // evapotranspiration: constant potential rate or station climate records
    double et_constant_mm_day = 0.0;
    std::filesystem::path climate_manifest;
    double elevation_m = 0.0;

    Plant plant;
    double initial_depth_m = 0.0;
    bool pond_surface_forcing = false;

    MpcConfig controller;
    std::vector<Strategy> strategies;
};

/// Every problem found in the file, empty when it is valid.
std::vector<std::string> validate_scenario(const std::filesystem::path& path);

/// Throws InvalidInput listing every problem.
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Output directory after applying the STORMRTC_OUTPUT_ROOT override.
std::filesystem::path resolve_output_dir(const ScenarioConfig& cfg);

struct WatershedLedger {
    double rain = 0.0;
    double outflow = 0.0;
    double et = 0.0;
    double infiltration = 0.0;
    double recharge = 0.0;
    double storage_initial = 0.0;  ///< surface plus infiltrated water
    double storage_final = 0.0;
    double surface_final = 0.0;
    /// Largest |residual| / cumulative rain seen at any step.
    double worst_relative_residual = 0.0;

    double residual() const { return rain - (outflow + et + recharge + storage_final - storage_initial); }
};

struct WatershedRun {
    PlantSeries series;  ///< outlet discharge and pond forcing on the plant grid
    WatershedLedger ledger;
    std::size_t steps = 0;
    double min_dt = 0.0;
};

/// Simulates the watershed once over the scenario span.
WatershedRun run_watershed(const ScenarioConfig& cfg);

struct IndicatorReport {
    std::string strategy;
    double peak_inflow = 0.0;
    double peak_outflow = 0.0;
    double reduction_pct = 0.0;
    double treated_volume = 0.0;
    std::optional<double> avg_detention_s;
    double max_depth = 0.0;
    std::size_t overtopping_steps = 0;
    double time_above_minor_s = 0.0;
    double time_above_major_s = 0.0;
    double outflow_volume = 0.0;
};

IndicatorReport indicators_from_trace(const RunTrace& trace, const MpcConfig& cfg, double dt);

struct ScenarioResult {
    WatershedRun watershed;
    std::vector<RunTrace> traces;
    std::filesystem::path output_dir;
};

/// Full pipeline; writes every trace, the ledger and report.csv under the output directory.
/// `only` restricts the run to one named strategy.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::optional<std::string>& only = std::nullopt);

void write_hydrograph(const std::filesystem::path& file, const PlantSeries& series);

/// Recomputes report.csv text from the traces in an output directory.
std::string report_from_directory(const std::filesystem::path& dir);

} // namespace stormrtc
