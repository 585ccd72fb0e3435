#include "stormrtc/routing.hpp"

#include "stormrtc/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stormrtc {

namespace {

// x^(2/3) and x^(5/3) for x >= 0 via cbrt, several times cheaper than pow.
inline double pow23(double x)
{
    const double c = std::cbrt(x);
    return c * c;
}

inline double pow53(double x)
{
    return x * pow23(x);
}

} // namespace

void RoutingParams::validate(const FlowTopology& topo) const
{
    if (!n.geometry.same_extent(topo.geometry) || n.size() != topo.geometry.size())
        throw InvalidInput("roughness raster does not match the flow topology grid");
    for (CellIndex i = 0; i < n.size(); ++i)
        if (topo.routed(i) && !(n[i] > 0.0))
            throw InvalidInput("Manning n must be positive on routed cells (cell " + std::to_string(i) + ")");
    if (!(cfl > 0.0 && cfl <= 1.0))
        throw InvalidInput("CFL number must lie in (0, 1]");
    if (!(dt_min > 0.0) || !(dt_min <= dt_max))
        throw InvalidInput("time-step bounds must satisfy 0 < dt_min <= dt_max");
}

double manning_cell_outflow(double h, double h0, double n, double s_f, double cellsize)
{
    const double d = h - h0;
    if (d <= 0.0)
        return 0.0;
    return pow53(d) / n * std::sqrt(s_f) * cellsize;
}

double kinematic_celerity(double h, double n, double s_f)
{
    if (h <= 0.0)
        return 0.0;
    return 5.0 / 3.0 * pow23(h) * std::sqrt(s_f) / n;
}

double stable_dt(const WatershedState& state, const FlowTopology& topo, const RoutingParams& params)
{
    double cmax = 0.0;
    for (CellIndex i = 0; i < topo.geometry.size(); ++i)
        if (topo.routed(i))
            cmax = std::max(cmax, kinematic_celerity(state.h_ef[i], params.n[i], topo.friction_slope[i]));
    if (cmax <= 0.0)
        return params.dt_max;
    return std::clamp(params.cfl * topo.geometry.cellsize / cmax, params.dt_min, params.dt_max);
}

WatershedModel::WatershedModel(FlowTopology topo, SoilField soil, RoutingParams params, WatershedState initial)
    : topo_(std::move(topo)), soil_(std::move(soil)), params_(std::move(params)), state_(std::move(initial))
{
    const auto& g = topo_.geometry;
    params_.validate(topo_);
    if (!soil_.geometry().same_extent(g) || !state_.h_ef.geometry.same_extent(g)
        || !state_.f_d.geometry.same_extent(g))
        throw InvalidInput("watershed inputs do not share one grid geometry");
    conveyance_.assign(g.size(), 0.0);
    celerity_.assign(g.size(), 0.0);
    for (CellIndex i = 0; i < g.size(); ++i) {
        if (!topo_.routed(i))
            continue;
        if (!(topo_.friction_slope[i] > 0.0))
            throw InvalidInput("friction slope must be positive on routed cells");
        if (state_.h_ef[i] < 0.0 || state_.f_d[i] < 0.0)
            throw InvalidInput("initial depths must be non-negative");
        routed_.push_back(i);
        const double r = std::sqrt(topo_.friction_slope[i]) / params_.n[i];
        conveyance_[i] = r * g.cellsize;
        celerity_[i] = 5.0 / 3.0 * r;
    }
    q_out_.assign(g.size(), 0.0);
    q_in_.assign(g.size(), 0.0);
}

double WatershedModel::stable_dt() const
{
    double cmax = 0.0;
    for (CellIndex i : routed_) {
        const double h = state_.h_ef[i];
        if (h > 0.0)
            cmax = std::max(cmax, celerity_[i] * pow23(h));
    }
    if (cmax <= 0.0)
        return params_.dt_max;
    return std::clamp(params_.cfl * topo_.geometry.cellsize / cmax, params_.dt_min, params_.dt_max);
}

double WatershedModel::surface_volume() const
{
    double v = 0.0;
    for (CellIndex i : routed_)
        v += state_.h_ef[i];
    return v * topo_.geometry.cell_area();
}

double WatershedModel::storage_volume() const
{
    double v = 0.0;
    for (CellIndex i : routed_)
        v += state_.h_ef[i] + state_.f_d[i];
    return v * topo_.geometry.cell_area();
}

WatershedStep WatershedModel::step(const ForcingSnapshot& forcing, double dt_limit)
{
    if (!(dt_limit > 0.0))
        throw InvalidInput("watershed step: dt limit must be positive");
    if (!forcing.i_p.geometry.same_extent(topo_.geometry) || !forcing.e_tr.geometry.same_extent(topo_.geometry))
        throw InvalidInput("forcing grid does not match the watershed grid");

    const double area = topo_.geometry.cell_area();
    WatershedStep out;
    out.dt = std::min(stable_dt(), dt_limit);
    const double dt = out.dt;
    auto& h = state_.h_ef.values;
    auto& fd = state_.f_d.values;

    double storage_before = 0.0;
    double q_outlet = 0.0;
    for (CellIndex i : routed_) {
        storage_before += h[i] + fd[i];
        q_in_[i] = 0.0;
        const double d = h[i] - soil_.at(i).h0;
        q_out_[i] = d > 0.0 ? std::min(pow53(d) * conveyance_[i], d * area / dt) : 0.0;
    }
    for (CellIndex i : routed_) {
        const auto ds = topo_.downstream[i];
        if (ds >= 0)
            q_in_[static_cast<CellIndex>(ds)] += q_out_[i];
        else
            q_outlet += q_out_[i];
    }

    double rain = 0.0, et = 0.0, inf = 0.0, rech = 0.0, storage_after = 0.0;
    for (CellIndex i : routed_) {
        CellState cs{h[i], fd[i]};
        const double ip = forcing.i_p[i];
        if (ip < 0.0)
            throw InvalidInput("negative rainfall rate in forcing");
        CellFluxes fx;
        try {
            fx = cell_update(cs, q_in_[i] / area, q_out_[i] / area, ip, forcing.e_tr[i], soil_.at(i), dt);
        } catch (const InvariantViolation& e) {
            throw InvariantViolation(std::string(e.what()) + " at cell " + std::to_string(i) + ", t = "
                                     + std::to_string(state_.t) + " s, dt = " + std::to_string(dt) + " s");
        }
        h[i] = cs.h_ef;
        fd[i] = cs.f_d;
        rain += ip;
        et += fx.e;
        inf += fx.f;
        rech += fx.recharge;
        storage_after += cs.h_ef + cs.f_d;
    }

    state_.t += dt;
    out.outlet = {state_.t, q_outlet};
    out.ledger.rain = rain * dt * area;
    out.ledger.et = et * dt * area;
    out.ledger.infiltration = inf * dt * area;
    out.ledger.recharge = rech * area;
    out.ledger.outflow = q_outlet * dt;
    out.ledger.storage_before = storage_before * area;
    out.ledger.storage_after = storage_after * area;
    return out;
}

std::pair<WatershedState, WatershedStep> step_watershed(const WatershedState& state, const FlowTopology& topo,
                                                        const SoilField& soil, const RoutingParams& params,
                                                        const ForcingSnapshot& forcing, double dt_limit)
{
    WatershedModel model(topo, soil, params, state);
    auto r = model.step(forcing, dt_limit);
    return {model.state(), r};
}

} // namespace stormrtc
