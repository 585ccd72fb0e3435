#pragma once

#include "stormrtc/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace stormrtc {

inline constexpr double kMmPerHourToMetersPerSecond = 1.0 / 3.6e6;
inline constexpr double kMmPerDayToMetersPerSecond = 1.0 / 8.64e7;

struct Station {
    double x = 0.0;
    double y = 0.0;
    double value = 0.0;
};

/// Precomputed inverse-distance weights from a fixed set of stations to every
/// cell centre of a grid. A cell within half a cellsize of a station snaps to it.
class IdwWeights {
public:
    IdwWeights(const GridGeometry& grid, std::span<const Station> stations, double exponent = 2.0);

    /// Interpolates one value per station. NaN station values are skipped and
    /// the remaining weights renormalised; a cell with no usable station gets 0.
    RasterField apply(std::span<const double> station_values) const;
    std::size_t station_count() const { return nstations_; }
    const GridGeometry& grid() const { return grid_; }

private:
    GridGeometry grid_;
    std::size_t nstations_ = 0;
    std::vector<double> weights_;     // cell-major, nstations_ per cell
    std::vector<std::int32_t> snap_;  // station index or -1
};

RasterField idw_interpolate(std::span<const Station> stations, const GridGeometry& grid,
                            double exponent = 2.0);

// ---------------------------------------------------------------------------
// Design storms

/// i [mm/h] = k * T^a / (t + b)^c with t in minutes and T in years.
struct IdfCurve {
    double k = 0.0;
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double return_period_years = 10.0;

    double intensity_mm_h(double duration_min) const;
};

/// Cumulative depth (mm) against duration (min); linear between points, (0, 0) implied.
struct DepthDurationTable {
    std::vector<std::pair<double, double>> points;

    double depth_mm(double duration_min) const;
};

struct DesignStormSpec {
    double total_depth_mm = 0.0;
    double duration_h = 0.0;
    double block_dt_min = 10.0;
    /// monostate means a uniform-intensity storm.
    std::variant<std::monostate, IdfCurve, DepthDurationTable> idf;

    std::size_t block_count() const;
};

struct Hyetograph {
    double block_dt_s = 0.0;
    std::vector<double> intensity_mm_h;

    double total_depth_mm() const;
};

/// Incremental block depths from the IDF, rescaled to total_depth_mm, in
/// duration order (largest-duration increment last).
std::vector<double> incremental_block_depths(const DesignStormSpec& spec);

/// Alternating-blocks hyetograph: largest block at position ceil(n/2), the
/// rest alternating right then left in decreasing magnitude.
Hyetograph alternating_blocks(const DesignStormSpec& spec);

// ---------------------------------------------------------------------------
// Reference evapotranspiration

struct ClimateDay {
    std::int64_t day_start = 0;  ///< epoch seconds of 00:00 UTC
    std::optional<double> t_mean_c;
    std::optional<double> rh_pct;
    std::optional<double> u2_ms;
    std::optional<double> rn_mj_m2_day;
    double g_mj_m2_day = 0.0;
};

struct Et0Options {
    double elevation_m = 0.0;
};

struct Et0Series {
    std::vector<std::int64_t> day_start;
    std::vector<double> et0_mm_day;
    std::vector<bool> gap_filled;
};

/// FAO-56 Penman-Monteith daily reference ET (mm/day) for a short grass surface.
double fao56_et0(double t_mean_c, double rh_pct, double u2_ms, double rn_mj_m2_day,
                 double g_mj_m2_day, double pressure_kpa);

/// Atmospheric pressure (kPa) of the FAO-56 standard atmosphere at elevation z.
double standard_pressure_kpa(double elevation_m);

/// Daily ET0 per record. Days missing any input are flagged and filled by
/// linear interpolation between the nearest valid days (constant beyond the ends).
Et0Series reference_evapotranspiration(std::span<const ClimateDay> climate, const Et0Options& options = {});

// ---------------------------------------------------------------------------
// Gauge records and per-cell snapshots

/// Piecewise-constant record: values[i] holds over [timestamps[i], timestamps[i+1]).
/// The last value holds for `interval_s` past the last timestamp.
struct GaugeSeries {
    std::string id;
    double x = 0.0;
    double y = 0.0;
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    double interval_s = 0.0;

    void validate(bool non_negative) const;
    double start() const { return static_cast<double>(timestamps.front()); }
    double end() const { return static_cast<double>(timestamps.back()) + interval_s; }
    /// Index of the interval enclosing t; throws OutOfRange outside [start, end).
    std::size_t interval_at(double t) const;
};

/// Reads `timestamp,value` CSV (ISO-8601 UTC). Missing values become NaN.
GaugeSeries read_gauge_csv(const std::filesystem::path& path);

struct StationFile {
    std::string id;
    double x = 0.0;
    double y = 0.0;
    std::filesystem::path path;
};

/// JSON manifest: {"stations": [{"id", "x", "y", "path"}]}; paths relative to the manifest.
std::vector<StationFile> read_station_manifest(const std::filesystem::path& manifest);

/// Climate CSV with columns date, t_mean_c, rh_pct, u2_ms, rn_mj_m2_day (g_mj_m2_day optional).
std::vector<ClimateDay> read_climate_csv(const std::filesystem::path& path);

/// Potential forcing on the scenario grid, both in m/s.
struct ForcingSnapshot {
    RasterField i_p;
    RasterField e_tr;
};

/// Spatially uniform piecewise-constant rate series (m/s), e.g. a design storm.
struct UniformSeries {
    double start = 0.0;
    double step_s = 0.0;
    std::vector<double> rate_m_s;

    double end() const { return start + step_s * static_cast<double>(rate_m_s.size()); }
};

/// Builds a uniform rainfall series over [start, start + span) at the storms'
/// block resolution; storms are placed at their offsets and zero elsewhere.
UniformSeries design_storm_series(double start, double span_s,
                                  std::span<const std::pair<double, Hyetograph>> storms_at_offsets);

/// Daily ET0 per station, disaggregated uniformly over each day.
struct StationEt {
    std::vector<Station> locations;
    std::vector<Et0Series> series;
};

/// Rainfall and potential ET on a grid as a function of time.
class ForcingModel {
public:
    ForcingModel(GridGeometry grid, UniformSeries rain, double et_rate_m_s);
    ForcingModel(GridGeometry grid, std::vector<GaugeSeries> rain_gauges, double idw_exponent,
                 double et_rate_m_s);

    void set_station_et(StationEt et, double idw_exponent);

    /// Rates in force at t (piecewise-constant). Throws OutOfRange outside the record.
    ForcingSnapshot snapshot_at(double t) const;
    /// First instant after t at which any rate may change (infinity if none).
    double next_change(double t) const;
    /// Record span of the rainfall input.
    double start() const;
    double end() const;

    const GridGeometry& grid() const { return grid_; }

private:
    RasterField rain_at(double t) const;
    RasterField et_at(double t) const;

    GridGeometry grid_;
    std::variant<UniformSeries, std::vector<GaugeSeries>> rain_;
    std::optional<IdwWeights> rain_weights_;
    double et_constant_ = 0.0;
    std::optional<StationEt> station_et_;
    std::optional<IdwWeights> et_weights_;
};

} // namespace stormrtc
