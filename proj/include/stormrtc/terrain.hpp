#pragma once

#include "stormrtc/grid.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace stormrtc {

/// Steepest-descent (D8) drainage graph of a conditioned DEM.
struct FlowTopology {
    static constexpr std::int64_t kOutlet = -1;
    static constexpr std::int64_t kNoData = -2;

    GridGeometry geometry;
    /// Downstream cell index, kOutlet for the outlet cell, kNoData for masked cells.
    std::vector<std::int64_t> downstream;
    /// Bed slope used as friction slope; 0 on masked cells.
    std::vector<double> friction_slope;
    CellIndex outlet_cell = 0;

    bool routed(CellIndex i) const { return downstream[i] != kNoData; }
};

/// Fills depressions and imposes a minimum descent of `min_slope` along every
/// drainage link (least-raise priority flood). With `outlet`, the flood is
/// seeded only from that cell so the whole domain drains to it; otherwise all
/// edge cells and cells bordering nodata act as seeds and keep their values.
RasterField condition_dem(const RasterField& dem, double min_slope,
                          std::optional<CellIndex> outlet = std::nullopt);

struct FlowTopologyOptions {
    /// Friction slope exported at the outlet (free outfall). When absent, the
    /// steepest gradient among the outlet's donor cells is used.
    std::optional<double> outlet_slope;
    /// Used when the outlet has no donors, e.g. a single-cell domain.
    double fallback_outlet_slope = 1e-3;
};

FlowTopology build_flow_topology(const RasterField& dem, CellIndex outlet,
                                 const FlowTopologyOptions& options = {});

/// Lowest-elevation valid cell on the grid boundary (first in row-major order on ties).
CellIndex lowest_boundary_cell(const RasterField& dem);

/// Number of links followed from `cell` until the outlet is reached.
std::size_t steps_to_outlet(const FlowTopology& topo, CellIndex cell);

} // namespace stormrtc
