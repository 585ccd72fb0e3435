#include "stormrtc/forcing.hpp"

#include "stormrtc/csv.hpp"
#include "stormrtc/error.hpp"
#include "stormrtc/timeutil.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace stormrtc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

// ---------------------------------------------------------------------------
// IDW

IdwWeights::IdwWeights(const GridGeometry& grid, std::span<const Station> stations, double exponent)
    : grid_(grid), nstations_(stations.size())
{
    grid.validate();
    if (stations.empty())
        throw InvalidInput("idw: at least one station is required");
    if (!(exponent > 0.0))
        throw InvalidInput("idw: exponent must be positive");

    weights_.assign(grid.size() * nstations_, 0.0);
    snap_.assign(grid.size(), -1);
    const double snap_radius = 0.5 * grid.cellsize;
    for (std::size_t r = 0; r < grid.nrows; ++r) {
        for (std::size_t c = 0; c < grid.ncols; ++c) {
            const CellIndex cell = grid.index(r, c);
            const double x = grid.x_center(c), y = grid.y_center(r);
            double nearest = kInf;
            for (std::size_t s = 0; s < nstations_; ++s) {
                const double d = std::hypot(x - stations[s].x, y - stations[s].y);
                if (d < snap_radius && d < nearest) {
                    nearest = d;
                    snap_[cell] = static_cast<std::int32_t>(s);
                }
                weights_[cell * nstations_ + s] = d > 0.0 ? std::pow(d, -exponent) : kInf;
            }
        }
    }
}

RasterField IdwWeights::apply(std::span<const double> values) const
{
    if (values.size() != nstations_)
        throw InvalidInput("idw: expected one value per station");
    RasterField out(grid_, 0.0);
    for (CellIndex cell = 0; cell < grid_.size(); ++cell) {
        const auto snapped = snap_[cell];
        if (snapped >= 0 && !std::isnan(values[static_cast<std::size_t>(snapped)])) {
            out[cell] = values[static_cast<std::size_t>(snapped)];
            continue;
        }
        double num = 0.0, den = 0.0;
        const double* w = &weights_[cell * nstations_];
        for (std::size_t s = 0; s < nstations_; ++s) {
            if (std::isnan(values[s]) || std::isinf(w[s]))
                continue;
            num += w[s] * values[s];
            den += w[s];
        }
        out[cell] = den > 0.0 ? num / den : 0.0;
    }
    return out;
}

RasterField idw_interpolate(std::span<const Station> stations, const GridGeometry& grid, double exponent)
{
    std::vector<double> values;
    values.reserve(stations.size());
    for (const auto& s : stations) {
        if (!std::isfinite(s.value))
            throw InvalidInput("idw: station values must be finite");
        values.push_back(s.value);
    }
    return IdwWeights(grid, stations, exponent).apply(values);
}

// ---------------------------------------------------------------------------
// Design storms

double IdfCurve::intensity_mm_h(double duration_min) const
{
    return k * std::pow(return_period_years, a) / std::pow(duration_min + b, c);
}

double DepthDurationTable::depth_mm(double t) const
{
    double t0 = 0.0, d0 = 0.0;
    for (const auto& [t1, d1] : points) {
        if (t <= t1)
            return t1 == t0 ? d1 : d0 + (d1 - d0) * (t - t0) / (t1 - t0);
        t0 = t1;
        d0 = d1;
    }
    throw InvalidInput("depth-duration table does not reach duration " + std::to_string(t) + " min");
}

std::size_t DesignStormSpec::block_count() const
{
    if (!(total_depth_mm > 0.0))
        throw InvalidInput("design storm: total depth must be positive");
    if (!(duration_h > 0.0) || !(block_dt_min > 0.0))
        throw InvalidInput("design storm: duration and block length must be positive");
    const double n = duration_h * 60.0 / block_dt_min;
    const double rounded = std::round(n);
    if (rounded < 1.0 || std::abs(n - rounded) > 1e-9 * std::max(1.0, n))
        throw InvalidInput("design storm: duration is not an integer multiple of the block length");
    return static_cast<std::size_t>(rounded);
}

double Hyetograph::total_depth_mm() const
{
    double sum = 0.0;
    for (double i : intensity_mm_h)
        sum += i * block_dt_s / 3600.0;
    return sum;
}

std::vector<double> incremental_block_depths(const DesignStormSpec& spec)
{
    const std::size_t n = spec.block_count();
    std::vector<double> cumulative(n + 1, 0.0);
    for (std::size_t j = 1; j <= n; ++j) {
        const double t = static_cast<double>(j) * spec.block_dt_min;
        cumulative[j] = std::visit(
            [&](const auto& idf) -> double {
                using T = std::decay_t<decltype(idf)>;
                if constexpr (std::is_same_v<T, std::monostate>)
                    return spec.total_depth_mm * static_cast<double>(j) / static_cast<double>(n);
                else if constexpr (std::is_same_v<T, IdfCurve>)
                    return idf.intensity_mm_h(t) * t / 60.0;
                else
                    return idf.depth_mm(t);
            },
            spec.idf);
    }
    if (!(cumulative[n] > 0.0))
        throw InvalidInput("design storm: IDF yields no depth over the storm duration");
    const double scale = spec.total_depth_mm / cumulative[n];
    std::vector<double> blocks(n);
    for (std::size_t j = 1; j <= n; ++j) {
        blocks[j - 1] = (cumulative[j] - cumulative[j - 1]) * scale;
        if (blocks[j - 1] < 0.0)
            throw InvalidInput("design storm: cumulative depth decreases with duration");
    }
    return blocks;
}

Hyetograph alternating_blocks(const DesignStormSpec& spec)
{
    const auto blocks = incremental_block_depths(spec);
    const std::size_t n = blocks.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return blocks[a] > blocks[b]; });

    std::vector<std::size_t> positions;
    positions.reserve(n);
    const auto centre = static_cast<std::int64_t>((n + 1) / 2) - 1;
    positions.push_back(static_cast<std::size_t>(centre));
    for (std::int64_t k = 1; positions.size() < n; ++k) {
        if (centre + k < static_cast<std::int64_t>(n))
            positions.push_back(static_cast<std::size_t>(centre + k));
        if (positions.size() < n && centre - k >= 0)
            positions.push_back(static_cast<std::size_t>(centre - k));
    }

    Hyetograph h;
    h.block_dt_s = spec.block_dt_min * 60.0;
    h.intensity_mm_h.assign(n, 0.0);
    for (std::size_t rank = 0; rank < n; ++rank)
        h.intensity_mm_h[positions[rank]] = blocks[order[rank]] * 60.0 / spec.block_dt_min;
    return h;
}

// ---------------------------------------------------------------------------
// FAO-56 reference evapotranspiration

double standard_pressure_kpa(double z)
{
    return 101.3 * std::pow((293.0 - 0.0065 * z) / 293.0, 5.26);
}

double fao56_et0(double t, double rh, double u2, double rn, double g, double pressure)
{
    const double gamma = 0.665e-3 * pressure;
    const double es = 0.6108 * std::exp(17.27 * t / (t + 237.3));
    const double ea = std::clamp(rh, 0.0, 100.0) / 100.0 * es;
    const double delta = 4098.0 * es / ((t + 237.3) * (t + 237.3));
    const double num = 0.408 * delta * (rn - g) + gamma * 900.0 / (t + 273.0) * u2 * (es - ea);
    const double den = delta + gamma * (1.0 + 0.34 * u2);
    return std::max(num / den, 0.0);
}

Et0Series reference_evapotranspiration(std::span<const ClimateDay> climate, const Et0Options& options)
{
    Et0Series out;
    const double pressure = standard_pressure_kpa(options.elevation_m);
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < climate.size(); ++i) {
        const auto& d = climate[i];
        out.day_start.push_back(d.day_start);
        const bool ok = d.t_mean_c && d.rh_pct && d.u2_ms && d.rn_mj_m2_day;
        out.gap_filled.push_back(!ok);
        out.et0_mm_day.push_back(
            ok ? fao56_et0(*d.t_mean_c, *d.rh_pct, *d.u2_ms, *d.rn_mj_m2_day, d.g_mj_m2_day, pressure) : 0.0);
        if (ok)
            valid.push_back(i);
    }
    if (valid.empty())
        throw InvalidInput("reference ET: no day has a complete climate record");

    for (std::size_t i = 0; i < climate.size(); ++i) {
        if (!out.gap_filled[i])
            continue;
        auto hi = std::lower_bound(valid.begin(), valid.end(), i);
        if (hi == valid.begin()) {
            out.et0_mm_day[i] = out.et0_mm_day[*hi];
        } else if (hi == valid.end()) {
            out.et0_mm_day[i] = out.et0_mm_day[valid.back()];
        } else {
            const auto lo = *(hi - 1);
            const double w = static_cast<double>(i - lo) / static_cast<double>(*hi - lo);
            out.et0_mm_day[i] = (1.0 - w) * out.et0_mm_day[lo] + w * out.et0_mm_day[*hi];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gauge records

void GaugeSeries::validate(bool non_negative) const
{
    if (timestamps.empty() || timestamps.size() != values.size())
        throw InvalidInput("gauge " + id + ": timestamps and values must be non-empty and aligned");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] <= timestamps[i - 1])
            throw InvalidInput("gauge " + id + ": timestamps must be strictly increasing");
    if (!(interval_s > 0.0))
        throw InvalidInput("gauge " + id + ": record interval must be positive");
    if (non_negative)
        for (double v : values)
            if (v < 0.0)
                throw InvalidInput("gauge " + id + ": negative rainfall value");
}

std::size_t GaugeSeries::interval_at(double t) const
{
    if (t < start() || t >= end())
        throw OutOfRange("gauge " + id + ": time " + format_iso8601(t) + " outside record span "
                         + format_iso8601(start()) + " .. " + format_iso8601(end()));
    auto it = std::upper_bound(timestamps.begin(), timestamps.end(), t,
                               [](double v, std::int64_t ts) { return v < static_cast<double>(ts); });
    return static_cast<std::size_t>(it - timestamps.begin()) - 1;
}

GaugeSeries read_gauge_csv(const std::filesystem::path& path)
{
    const auto table = CsvTable::read(path);
    const auto tcol = table.require_column("timestamp");
    const auto vcol = table.require_column("value");
    GaugeSeries g;
    g.id = path.stem().string();
    for (std::size_t r = 0; r < table.rows(); ++r) {
        g.timestamps.push_back(parse_iso8601(table.cell(r, tcol)));
        g.values.push_back(table.number(r, vcol).value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    if (g.timestamps.size() < 2)
        throw InvalidInput(path.string() + ": a gauge record needs at least two rows");
    double spacing = kInf;
    for (std::size_t i = 1; i < g.timestamps.size(); ++i)
        spacing = std::min(spacing, static_cast<double>(g.timestamps[i] - g.timestamps[i - 1]));
    g.interval_s = spacing;
    return g;
}

std::vector<StationFile> read_station_manifest(const std::filesystem::path& manifest)
{
    std::ifstream in(manifest);
    if (!in)
        throw InvalidInput("cannot open station manifest " + manifest.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(manifest.string() + ": " + e.what());
    }
    std::vector<StationFile> out;
    if (!j.contains("stations") || !j["stations"].is_array())
        throw InvalidInput(manifest.string() + ": expected a \"stations\" array");
    for (const auto& s : j["stations"]) {
        StationFile f;
        try {
            f.id = s.at("id").get<std::string>();
            f.x = s.at("x").get<double>();
            f.y = s.at("y").get<double>();
            f.path = s.at("path").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput(manifest.string() + ": station entry: " + e.what());
        }
        if (f.path.is_relative())
            f.path = manifest.parent_path() / f.path;
        out.push_back(std::move(f));
    }
    if (out.empty())
        throw InvalidInput(manifest.string() + ": no stations listed");
    return out;
}

std::vector<ClimateDay> read_climate_csv(const std::filesystem::path& path)
{
    const auto table = CsvTable::read(path);
    const auto date = table.require_column("date");
    const auto t = table.require_column("t_mean_c");
    const auto rh = table.require_column("rh_pct");
    const auto u2 = table.require_column("u2_ms");
    const auto rn = table.require_column("rn_mj_m2_day");
    const auto g = table.column("g_mj_m2_day");
    std::vector<ClimateDay> days;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        ClimateDay d;
        d.day_start = parse_iso8601(table.cell(r, date));
        if (d.day_start % kSecondsPerDay != 0)
            throw InvalidInput(path.string() + ": climate dates must be whole UTC days");
        if (!days.empty() && d.day_start != days.back().day_start + kSecondsPerDay)
            throw InvalidInput(path.string() + ": climate rows must be consecutive days");
        d.t_mean_c = table.number(r, t);
        d.rh_pct = table.number(r, rh);
        d.u2_ms = table.number(r, u2);
        d.rn_mj_m2_day = table.number(r, rn);
        if (g)
            d.g_mj_m2_day = table.number(r, *g).value_or(0.0);
        days.push_back(d);
    }
    if (days.empty())
        throw InvalidInput(path.string() + ": no climate rows");
    return days;
}

// ---------------------------------------------------------------------------
// Forcing model

UniformSeries design_storm_series(double start, double span_s,
                                  std::span<const std::pair<double, Hyetograph>> storms)
{
    if (!(span_s > 0.0))
        throw InvalidInput("design storm series: span must be positive");
    UniformSeries s;
    s.start = start;
    s.step_s = storms.empty() ? span_s : storms.front().second.block_dt_s;
    for (const auto& [offset, h] : storms)
        if (h.block_dt_s != s.step_s)
            throw InvalidInput("design storm series: all storms must share one block length");
    const auto n = static_cast<std::size_t>(std::ceil(span_s / s.step_s - 1e-9));
    s.rate_m_s.assign(n, 0.0);
    for (const auto& [offset, h] : storms) {
        const double k = offset / s.step_s;
        if (offset < 0.0 || std::abs(k - std::round(k)) > 1e-9)
            throw InvalidInput("design storm series: storm offsets must be non-negative multiples of the block length");
        const auto first = static_cast<std::size_t>(std::round(k));
        for (std::size_t b = 0; b < h.intensity_mm_h.size(); ++b) {
            if (first + b >= n)
                throw InvalidInput("design storm series: storm extends past the simulation span");
            s.rate_m_s[first + b] += h.intensity_mm_h[b] * kMmPerHourToMetersPerSecond;
        }
    }
    return s;
}

ForcingModel::ForcingModel(GridGeometry grid, UniformSeries rain, double et_rate_m_s)
    : grid_(grid), rain_(std::move(rain)), et_constant_(et_rate_m_s)
{
    grid_.validate();
    const auto& s = std::get<UniformSeries>(rain_);
    if (!(s.step_s > 0.0) || s.rate_m_s.empty())
        throw InvalidInput("uniform rainfall series is empty");
    for (double r : s.rate_m_s)
        if (!(r >= 0.0))
            throw InvalidInput("uniform rainfall series has a negative rate");
    if (!(et_rate_m_s >= 0.0))
        throw InvalidInput("potential ET rate must be non-negative");
}

ForcingModel::ForcingModel(GridGeometry grid, std::vector<GaugeSeries> gauges, double idw_exponent,
                           double et_rate_m_s)
    : grid_(grid), rain_(std::move(gauges)), et_constant_(et_rate_m_s)
{
    grid_.validate();
    const auto& gs = std::get<std::vector<GaugeSeries>>(rain_);
    std::vector<Station> locations;
    for (const auto& g : gs) {
        g.validate(true);
        locations.push_back({g.x, g.y, 0.0});
    }
    rain_weights_.emplace(grid_, locations, idw_exponent);
    if (!(et_rate_m_s >= 0.0))
        throw InvalidInput("potential ET rate must be non-negative");
}

void ForcingModel::set_station_et(StationEt et, double idw_exponent)
{
    if (et.locations.size() != et.series.size() || et.locations.empty())
        throw InvalidInput("station ET: one series per location is required");
    et_weights_.emplace(grid_, et.locations, idw_exponent);
    station_et_ = std::move(et);
}

double ForcingModel::start() const
{
    if (const auto* u = std::get_if<UniformSeries>(&rain_))
        return u->start;
    double s = -kInf;
    for (const auto& g : std::get<std::vector<GaugeSeries>>(rain_))
        s = std::max(s, g.start());
    return s;
}

double ForcingModel::end() const
{
    if (const auto* u = std::get_if<UniformSeries>(&rain_))
        return u->end();
    double e = kInf;
    for (const auto& g : std::get<std::vector<GaugeSeries>>(rain_))
        e = std::min(e, g.end());
    return e;
}

RasterField ForcingModel::rain_at(double t) const
{
    if (const auto* u = std::get_if<UniformSeries>(&rain_)) {
        if (t < u->start || t >= u->end())
            throw OutOfRange("rainfall requested at " + format_iso8601(t) + ", outside the design-storm span");
        const auto k = std::min(static_cast<std::size_t>((t - u->start) / u->step_s), u->rate_m_s.size() - 1);
        return RasterField(grid_, u->rate_m_s[k]);
    }
    const auto& gs = std::get<std::vector<GaugeSeries>>(rain_);
    std::vector<double> values;
    values.reserve(gs.size());
    for (const auto& g : gs)
        values.push_back(g.values[g.interval_at(t)] * kMmPerHourToMetersPerSecond);
    return rain_weights_->apply(values);
}

RasterField ForcingModel::et_at(double t) const
{
    if (!station_et_)
        return RasterField(grid_, et_constant_);
    const auto day = static_cast<std::int64_t>(std::floor(t / static_cast<double>(kSecondsPerDay))) * kSecondsPerDay;
    std::vector<double> values;
    for (const auto& s : station_et_->series) {
        if (s.day_start.empty() || day < s.day_start.front() || day > s.day_start.back())
            throw OutOfRange("potential ET requested at " + format_iso8601(t) + ", outside the climate record");
        const auto idx = static_cast<std::size_t>((day - s.day_start.front()) / kSecondsPerDay);
        values.push_back(s.et0_mm_day[idx] * kMmPerDayToMetersPerSecond);
    }
    return et_weights_->apply(values);
}

ForcingSnapshot ForcingModel::snapshot_at(double t) const
{
    return {rain_at(t), et_at(t)};
}

double ForcingModel::next_change(double t) const
{
    double next = kInf;
    if (const auto* u = std::get_if<UniformSeries>(&rain_)) {
        const double k = std::floor((t - u->start) / u->step_s) + 1.0;
        next = u->start + std::max(k, 0.0) * u->step_s;
        if (next > u->end())
            next = kInf;
    } else {
        for (const auto& g : std::get<std::vector<GaugeSeries>>(rain_)) {
            auto it = std::upper_bound(g.timestamps.begin(), g.timestamps.end(), t,
                                       [](double v, std::int64_t ts) { return v < static_cast<double>(ts); });
            next = std::min(next, it == g.timestamps.end() ? g.end() : static_cast<double>(*it));
        }
    }
    if (station_et_) {
        const double day = static_cast<double>(kSecondsPerDay);
        next = std::min(next, (std::floor(t / day) + 1.0) * day);
    }
    return next;
}

} // namespace stormrtc
