#pragma once

#include "stormrtc/forcing.hpp"
#include "stormrtc/grid.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace stormrtc {

/// Platform-independent uniform [0, 1) draws from a 64-bit Mersenne twister.
class PortableRng {
public:
    explicit PortableRng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double exponential(double mean);

private:
    std::mt19937_64 engine_;
};

struct ValleySpec {
    std::size_t ncols = 72;
    std::size_t nrows = 72;
    double cellsize = 30.0;
    double axis_slope = 0.05;   ///< down-valley gradient toward the south edge
    double side_slope = 0.2;    ///< hillslope gradient toward the valley axis
    double base_elevation = 700.0;
};

/// V-shaped valley draining south along the central column. The outlet is
/// the centre cell of the south row.
RasterField valley_dem(const ValleySpec& spec);
CellIndex valley_outlet(const ValleySpec& spec);

struct SyntheticRainSpec {
    double interval_s = 600.0;
    double storm_probability_per_day = 0.3;
    double mean_duration_h = 3.0;
    double mean_intensity_mm_h = 6.0;
    double gauge_scatter = 0.3;  ///< per-gauge multiplier drawn from 1 +- scatter
};

/// Gauge records sharing storm timing, with per-gauge intensity scatter.
std::vector<GaugeSeries> synthetic_gauges(std::uint64_t seed, std::int64_t start, double days,
                                          const std::vector<Station>& locations, const SyntheticRainSpec& spec = {});

/// Smooth seasonal daily climate records starting at a UTC midnight.
std::vector<ClimateDay> synthetic_climate(std::uint64_t seed, std::int64_t first_day, std::size_t days);

} // namespace stormrtc
