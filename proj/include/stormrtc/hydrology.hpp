#pragma once

#include "stormrtc/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

namespace stormrtc {

/// Green-Ampt soil column. ksat = 0 makes the cell impervious.
struct SoilParams {
    double psi = 0.0;            ///< wetting-front suction head (m)
    double ksat = 0.0;           ///< saturated conductivity (m/s)
    double dtheta = 0.0;         ///< moisture deficit (-)
    double h0 = 0.0;             ///< initial abstraction, a routing threshold (m)
    double recharge_rate = 0.0;  ///< drainage of f_d to groundwater (m/s)

    void validate() const;
};

/// Floor on f_d inside the Green-Ampt capacity, avoiding the 1/f_d singularity.
inline constexpr double kMinInfiltratedDepth = 1e-4;

/// Infiltration rate (m/s): min(available, ksat * (1 + psi * dtheta / max(f_d, floor))).
double green_ampt_rate(double f_d, const SoilParams& soil, double available);

/// f_d after groundwater replenishment over dt: max(f_d - recharge_rate * dt, 0).
double recharge_step(double f_d, const SoilParams& soil, double dt);

/// Actual evapotranspiration rate (m/s) from a water depth h over dt.
double actual_et(double h, double potential, double dt);

struct CellState {
    double h_ef = 0.0;
    double f_d = 0.0;
};

/// Rates applied during one cell update (m/s), and the recharge depth (m).
struct CellFluxes {
    double e = 0.0;
    double f = 0.0;
    double recharge = 0.0;
};

/// Explicit mass balance of one cell. q_in and q_out are depth rates (m/s).
/// Evaporation and infiltration draw on the step's supply
/// h/dt + q_in + i_p - q_out; a tiny negative round-off is absorbed by
/// reducing f, anything larger throws InvariantViolation.
CellFluxes cell_update(CellState& state, double q_in, double q_out, double i_p, double e_pot,
                       const SoilParams& soil, double dt);

/// Soil classes and the class of each cell.
class SoilField {
public:
    SoilField() = default;
    static SoilField uniform(const GridGeometry& grid, const SoilParams& soil);
    /// `classes` holds integer class ids; nodata cells get no class.
    static SoilField from_classes(const RasterField& classes, const std::map<int, SoilParams>& table);

    const SoilParams& at(CellIndex cell) const { return classes_[class_of_[cell]]; }
    const GridGeometry& geometry() const { return geometry_; }

private:
    GridGeometry geometry_;
    std::vector<SoilParams> classes_;
    std::vector<std::uint32_t> class_of_;
};

/// CSV with columns class, psi_m, ksat_m_s, dtheta, h0_m, recharge_m_s.
std::map<int, SoilParams> read_soil_table(const std::filesystem::path& path);

struct WatershedState {
    RasterField h_ef;
    RasterField f_d;
    double t = 0.0;

    static WatershedState dry(const GridGeometry& grid, double t0);
};

} // namespace stormrtc
