#pragma once

#include "stormrtc/forcing.hpp"
#include "stormrtc/hydrology.hpp"
#include "stormrtc/terrain.hpp"

#include <utility>
#include <vector>

namespace stormrtc {

struct RoutingParams {
    RasterField n;  ///< Manning roughness (s m^-1/3)
    double cfl = 0.5;
    double dt_min = 0.1;
    double dt_max = 60.0;

    void validate(const FlowTopology& topo) const;
};

/// Kinematic-wave cell discharge (m3/s): max(h - h0, 0)^(5/3) / n * sqrt(s_f) * cellsize.
double manning_cell_outflow(double h, double h0, double n, double s_f, double cellsize);

/// Kinematic celerity (5/3) h^(2/3) sqrt(s_f) / n (m/s).
double kinematic_celerity(double h, double n, double s_f);

/// clamp(cfl * cellsize / c_max, dt_min, dt_max); dt_max on a dry domain.
double stable_dt(const WatershedState& state, const FlowTopology& topo, const RoutingParams& params);

struct OutletRecord {
    double t = 0.0;  ///< end of the step
    double q_out_w = 0.0;
};

/// Volumes (m3) over one step, summed over routed cells.
struct StepLedger {
    double rain = 0.0;
    double et = 0.0;
    double infiltration = 0.0;
    double recharge = 0.0;
    double outflow = 0.0;
    double storage_before = 0.0;  ///< surface water plus infiltrated depth
    double storage_after = 0.0;

    /// rain - (outflow + et + recharge + change in storage).
    double residual() const { return rain - (outflow + et + recharge + storage_after - storage_before); }
};

struct WatershedStep {
    double dt = 0.0;
    OutletRecord outlet;
    StepLedger ledger;
};

/// Explicit kinematic-wave watershed on a D8 topology. Steps in place with
/// internal scratch buffers; forcing is held constant over each step.
class WatershedModel {
public:
    WatershedModel(FlowTopology topo, SoilField soil, RoutingParams params, WatershedState initial);

    /// Advances by min(stable dt, dt_limit).
    WatershedStep step(const ForcingSnapshot& forcing, double dt_limit);

    double stable_dt() const;
    const WatershedState& state() const { return state_; }
    const FlowTopology& topology() const { return topo_; }
    /// Surface water plus infiltrated depth over routed cells (m3).
    double storage_volume() const;
    double surface_volume() const;

private:
    FlowTopology topo_;
    SoilField soil_;
    RoutingParams params_;
    WatershedState state_;
    std::vector<CellIndex> routed_;
    std::vector<double> conveyance_;  // sqrt(s_f) / n * cellsize
    std::vector<double> celerity_;    // (5/3) sqrt(s_f) / n
    std::vector<double> q_out_;
    std::vector<double> q_in_;
};

/// Single step from an explicit state; convenience wrapper over WatershedModel.
std::pair<WatershedState, WatershedStep> step_watershed(const WatershedState& state, const FlowTopology& topo,
                                                        const SoilField& soil, const RoutingParams& params,
                                                        const ForcingSnapshot& forcing, double dt_limit);

} // namespace stormrtc
