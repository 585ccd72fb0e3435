#include "stormrtc/terrain.hpp"

#include "stormrtc/error.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <tuple>

namespace stormrtc {

namespace {

std::string cell_name(const GridGeometry& g, CellIndex i)
{
    return "(row " + std::to_string(g.row_of(i)) + ", col " + std::to_string(g.col_of(i)) + ")";
}

bool on_boundary(const RasterField& dem, CellIndex i)
{
    const auto& g = dem.geometry;
    for (int d = 0; d < 8; ++d) {
        auto n = neighbor(g, i, d);
        if (n < 0 || dem.is_nodata(static_cast<CellIndex>(n)))
            return true;
    }
    return false;
}

} // namespace

RasterField condition_dem(const RasterField& dem, double min_slope, std::optional<CellIndex> outlet)
{
    const auto& g = dem.geometry;
    g.validate();
    if (!(min_slope >= 0.0))
        throw InvalidInput("min_slope must be non-negative");
    if (dem.valid_count() == 0)
        throw InvalidInput("condition_dem: raster has no valid cells");
    if (outlet && (*outlet >= dem.size() || dem.is_nodata(*outlet)))
        throw InvalidInput("condition_dem: outlet is outside the grid or on a nodata cell");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    RasterField out = dem;
    std::vector<double> best(dem.size(), kInf);
    std::vector<char> done(dem.size(), 0);

    // (elevation, push sequence, cell): the sequence makes the pop order total.
    using Entry = std::tuple<double, std::uint64_t, CellIndex>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    std::uint64_t seq = 0;

    if (outlet) {
        best[*outlet] = dem[*outlet];
        open.emplace(best[*outlet], seq++, *outlet);
    } else {
        for (CellIndex i = 0; i < dem.size(); ++i)
            if (!dem.is_nodata(i) && on_boundary(dem, i)) {
                best[i] = dem[i];
                open.emplace(best[i], seq++, i);
            }
    }

    while (!open.empty()) {
        auto [z, s, c] = open.top();
        open.pop();
        if (done[c])
            continue;
        done[c] = 1;
        out[c] = z;
        for (int d = 0; d < 8; ++d) {
            auto n = neighbor(g, c, d);
            if (n < 0)
                continue;
            auto ni = static_cast<CellIndex>(n);
            if (done[ni] || dem.is_nodata(ni))
                continue;
            const double cand = std::max(dem[ni], z + min_slope * link_length(g, d));
            if (cand < best[ni]) {
                best[ni] = cand;
                open.emplace(cand, seq++, ni);
            }
        }
    }

    for (CellIndex i = 0; i < dem.size(); ++i)
        if (!dem.is_nodata(i) && !done[i])
            throw InvalidInput("condition_dem: cell " + cell_name(g, i)
                               + " is cut off from the outlet by nodata");
    return out;
}

FlowTopology build_flow_topology(const RasterField& dem, CellIndex outlet,
                                 const FlowTopologyOptions& options)
{
    const auto& g = dem.geometry;
    g.validate();
    if (outlet >= dem.size() || dem.is_nodata(outlet))
        throw InvalidInput("build_flow_topology: outlet is outside the grid or on a nodata cell");

    FlowTopology topo;
    topo.geometry = g;
    topo.outlet_cell = outlet;
    topo.downstream.assign(dem.size(), FlowTopology::kNoData);
    topo.friction_slope.assign(dem.size(), 0.0);

    for (CellIndex i = 0; i < dem.size(); ++i) {
        if (dem.is_nodata(i) || i == outlet)
            continue;
        double best = 0.0;
        std::int64_t target = -1;
        for (int d = 0; d < 8; ++d) {
            auto n = neighbor(g, i, d);
            if (n < 0 || dem.is_nodata(static_cast<CellIndex>(n)))
                continue;
            const double grad = (dem[i] - dem[static_cast<CellIndex>(n)]) / link_length(g, d);
            if (grad > best) {
                best = grad;
                target = n;
            }
        }
        if (target < 0)
            throw InvalidInput("build_flow_topology: cell " + cell_name(g, i)
                               + " has no downslope neighbour; condition the DEM first");
        topo.downstream[i] = target;
        topo.friction_slope[i] = best;
    }

    topo.downstream[outlet] = FlowTopology::kOutlet;
    if (options.outlet_slope) {
        if (!(*options.outlet_slope > 0.0))
            throw InvalidInput("outlet slope must be positive");
        topo.friction_slope[outlet] = *options.outlet_slope;
    } else {
        double s = 0.0;
        for (int d = 0; d < 8; ++d) {
            auto n = neighbor(g, outlet, d);
            if (n >= 0 && topo.downstream[static_cast<CellIndex>(n)] == static_cast<std::int64_t>(outlet))
                s = std::max(s, topo.friction_slope[static_cast<CellIndex>(n)]);
        }
        topo.friction_slope[outlet] = s > 0.0 ? s : options.fallback_outlet_slope;
    }

    // Every routed cell must reach the outlet without revisiting a cell.
    std::vector<char> state(dem.size(), 0); // 0 unseen, 1 on current path, 2 drains to outlet
    state[outlet] = 2;
    std::vector<CellIndex> path;
    for (CellIndex i = 0; i < dem.size(); ++i) {
        if (!topo.routed(i) || state[i] == 2)
            continue;
        path.clear();
        CellIndex c = i;
        while (state[c] == 0) {
            state[c] = 1;
            path.push_back(c);
            c = static_cast<CellIndex>(topo.downstream[c]);
        }
        if (state[c] == 1)
            throw InvariantViolation("build_flow_topology: drainage cycle through cell " + cell_name(g, c));
        for (auto p : path)
            state[p] = 2;
    }
    return topo;
}

CellIndex lowest_boundary_cell(const RasterField& dem)
{
    CellIndex best = dem.size();
    for (CellIndex i = 0; i < dem.size(); ++i) {
        if (dem.is_nodata(i) || !on_boundary(dem, i))
            continue;
        if (best == dem.size() || dem[i] < dem[best])
            best = i;
    }
    if (best == dem.size())
        throw InvalidInput("raster has no valid boundary cell");
    return best;
}

std::size_t steps_to_outlet(const FlowTopology& topo, CellIndex cell)
{
    std::size_t n = 0;
    while (topo.downstream[cell] >= 0) {
        cell = static_cast<CellIndex>(topo.downstream[cell]);
        if (++n > topo.downstream.size())
            throw InvariantViolation("steps_to_outlet: path longer than the grid");
    }
    if (topo.downstream[cell] != FlowTopology::kOutlet)
        throw InvalidInput("steps_to_outlet: cell is not routed");
    return n;
}

} // namespace stormrtc
