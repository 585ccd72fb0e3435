#include "stormrtc/hydrology.hpp"

#include "stormrtc/csv.hpp"
#include "stormrtc/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stormrtc {

void SoilParams::validate() const
{
    if (!(psi >= 0.0) || !(ksat >= 0.0) || !(dtheta >= 0.0 && dtheta <= 1.0) || !(h0 >= 0.0)
        || !(recharge_rate >= 0.0))
        throw InvalidInput("soil parameters out of range (psi, ksat, h0, recharge >= 0; 0 <= dtheta <= 1)");
}

double green_ampt_rate(double f_d, const SoilParams& soil, double available)
{
    if (available <= 0.0 || soil.ksat <= 0.0)
        return 0.0;
    const double capacity = soil.ksat * (1.0 + soil.psi * soil.dtheta / std::max(f_d, kMinInfiltratedDepth));
    return std::min(available, capacity);
}

double recharge_step(double f_d, const SoilParams& soil, double dt)
{
    return std::max(f_d - soil.recharge_rate * dt, 0.0);
}

double actual_et(double h, double potential, double dt)
{
    if (potential <= 0.0 || h <= 0.0)
        return 0.0;
    return std::min(potential, h / dt);
}

CellFluxes cell_update(CellState& s, double q_in, double q_out, double i_p, double e_pot,
                       const SoilParams& soil, double dt)
{
    CellFluxes fx;
    const double supply = s.h_ef / dt + q_in + i_p - q_out;
    fx.e = actual_et(supply * dt, e_pot, dt);
    fx.f = green_ampt_rate(s.f_d, soil, supply - fx.e);

    double h = s.h_ef + dt * (q_in + i_p - fx.e - q_out - fx.f);
    if (h < 0.0) {
        const double deficit = -h / dt;
        const double take = std::min(deficit, fx.f);
        fx.f -= take;
        h = s.h_ef + dt * (q_in + i_p - fx.e - q_out - fx.f);
        if (h < -1e-12)
            throw InvariantViolation("cell mass balance: depth " + std::to_string(h)
                                     + " m after limiter (outflow exceeds supply)");
        h = std::max(h, 0.0);
    }

    const double wetted = s.f_d + fx.f * dt;
    const double after = recharge_step(wetted, soil, dt);
    fx.recharge = wetted - after;
    s.h_ef = h;
    s.f_d = after;
    return fx;
}

SoilField SoilField::uniform(const GridGeometry& grid, const SoilParams& soil)
{
    soil.validate();
    SoilField f;
    f.geometry_ = grid;
    f.classes_ = {soil};
    f.class_of_.assign(grid.size(), 0);
    return f;
}

SoilField SoilField::from_classes(const RasterField& classes, const std::map<int, SoilParams>& table)
{
    SoilField f;
    f.geometry_ = classes.geometry;
    std::map<int, std::uint32_t> slot;
    for (const auto& [id, p] : table) {
        p.validate();
        slot[id] = static_cast<std::uint32_t>(f.classes_.size());
        f.classes_.push_back(p);
    }
    if (f.classes_.empty())
        throw InvalidInput("soil class table is empty");
    f.class_of_.assign(classes.size(), 0);
    for (CellIndex i = 0; i < classes.size(); ++i) {
        if (classes.is_nodata(i))
            continue;
        const double v = classes[i];
        const auto id = static_cast<int>(std::lround(v));
        if (std::abs(v - id) > 1e-9)
            throw InvalidInput("soil class raster holds a non-integer value " + std::to_string(v));
        const auto it = slot.find(id);
        if (it == slot.end())
            throw InvalidInput("soil class " + std::to_string(id) + " missing from the class table");
        f.class_of_[i] = it->second;
    }
    return f;
}

std::map<int, SoilParams> read_soil_table(const std::filesystem::path& path)
{
    const auto t = CsvTable::read(path);
    const auto cls = t.require_column("class");
    const auto psi = t.require_column("psi_m");
    const auto ksat = t.require_column("ksat_m_s");
    const auto dth = t.require_column("dtheta");
    const auto h0 = t.require_column("h0_m");
    const auto rec = t.require_column("recharge_m_s");
    std::map<int, SoilParams> out;
    auto need = [&](std::size_t r, std::size_t c) {
        const auto v = t.number(r, c);
        if (!v)
            throw InvalidInput(path.string() + ": missing value in row " + std::to_string(r + 1));
        return *v;
    };
    for (std::size_t r = 0; r < t.rows(); ++r) {
        SoilParams p{need(r, psi), need(r, ksat), need(r, dth), need(r, h0), need(r, rec)};
        p.validate();
        const int id = static_cast<int>(need(r, cls));
        if (!out.emplace(id, p).second)
            throw InvalidInput(path.string() + ": duplicate soil class " + std::to_string(id));
    }
    return out;
}

WatershedState WatershedState::dry(const GridGeometry& grid, double t0)
{
    return {RasterField(grid, 0.0), RasterField(grid, 0.0), t0};
}

} // namespace stormrtc
