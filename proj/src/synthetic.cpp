#include "stormrtc/synthetic.hpp"

#include "stormrtc/error.hpp"
#include "stormrtc/timeutil.hpp"

#include <cmath>

namespace stormrtc {

double PortableRng::exponential(double mean)
{
    return -mean * std::log1p(-uniform());
}

RasterField valley_dem(const ValleySpec& s)
{
    GridGeometry g{s.ncols, s.nrows, s.cellsize, 0.0, 0.0, -9999.0};
    g.validate();
    RasterField dem(g, 0.0);
    const double axis = static_cast<double>(s.ncols / 2);
    for (std::size_t r = 0; r < s.nrows; ++r) {
        const double from_south = static_cast<double>(s.nrows - 1 - r) * s.cellsize;
        for (std::size_t c = 0; c < s.ncols; ++c) {
            const double across = std::abs(static_cast<double>(c) - axis) * s.cellsize;
            dem.at(r, c) = s.base_elevation + s.axis_slope * from_south + s.side_slope * across;
        }
    }
    return dem;
}

CellIndex valley_outlet(const ValleySpec& s)
{
    return (s.nrows - 1) * s.ncols + s.ncols / 2;
}

std::vector<GaugeSeries> synthetic_gauges(std::uint64_t seed, std::int64_t start, double days,
                                          const std::vector<Station>& locations, const SyntheticRainSpec& spec)
{
    if (locations.empty() || !(days > 0.0) || !(spec.interval_s > 0.0))
        throw InvalidInput("synthetic gauges: need stations, a positive span and interval");
    const auto n = static_cast<std::size_t>(std::llround(days * static_cast<double>(kSecondsPerDay) / spec.interval_s));
    const auto step = static_cast<std::int64_t>(spec.interval_s);

    // Storm timing and base intensity are shared; each gauge scales them.
    std::vector<double> base(n, 0.0);
    PortableRng storms(seed);
    const auto per_day = static_cast<std::size_t>(static_cast<double>(kSecondsPerDay) / spec.interval_s);
    for (std::size_t d = 0; d * per_day < n; ++d) {
        if (storms.uniform() >= spec.storm_probability_per_day)
            continue;
        const auto first = d * per_day + static_cast<std::size_t>(storms.uniform() * static_cast<double>(per_day));
        const auto len = 1 + static_cast<std::size_t>(storms.exponential(spec.mean_duration_h * 3600.0) / spec.interval_s);
        const double peak = storms.exponential(spec.mean_intensity_mm_h) * 2.0;
        for (std::size_t k = 0; k < len && first + k < n; ++k) {
            const double x = (static_cast<double>(k) + 0.5) / static_cast<double>(len);
            base[first + k] += peak * std::sin(M_PI * x) * storms.uniform(0.5, 1.5);
        }
    }

    std::vector<GaugeSeries> out;
    for (std::size_t gi = 0; gi < locations.size(); ++gi) {
        PortableRng rng(seed * 1000003u + gi + 1);
        GaugeSeries g;
        g.id = "gauge" + std::to_string(gi + 1);
        g.x = locations[gi].x;
        g.y = locations[gi].y;
        g.interval_s = spec.interval_s;
        const double factor = 1.0 + rng.uniform(-spec.gauge_scatter, spec.gauge_scatter);
        for (std::size_t i = 0; i < n; ++i) {
            g.timestamps.push_back(start + static_cast<std::int64_t>(i) * step);
            g.values.push_back(std::round(base[i] * factor * 100.0) / 100.0);
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<ClimateDay> synthetic_climate(std::uint64_t seed, std::int64_t first_day, std::size_t days)
{
    if (first_day % kSecondsPerDay != 0)
        throw InvalidInput("synthetic climate must start at a UTC midnight");
    PortableRng rng(seed);
    std::vector<ClimateDay> out;
    for (std::size_t i = 0; i < days; ++i) {
        const double phase = 2.0 * M_PI * static_cast<double>(i) / 365.0;
        ClimateDay d;
        d.day_start = first_day + static_cast<std::int64_t>(i) * kSecondsPerDay;
        d.t_mean_c = std::round((21.0 + 4.0 * std::cos(phase) + rng.uniform(-2.0, 2.0)) * 10.0) / 10.0;
        d.rh_pct = std::round(70.0 + rng.uniform(-15.0, 15.0));
        d.u2_ms = std::round(rng.uniform(1.0, 3.5) * 10.0) / 10.0;
        d.rn_mj_m2_day = std::round((12.0 + 3.0 * std::cos(phase) + rng.uniform(-4.0, 4.0)) * 10.0) / 10.0;
        out.push_back(d);
    }
    return out;
}

} // namespace stormrtc
