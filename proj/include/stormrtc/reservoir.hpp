#pragma once

#include <utility>
#include <vector>

namespace stormrtc {

/// Piecewise-linear stage-area curve with a piecewise-constant porosity per
/// segment. Above the top breakpoint the last segment is extrapolated.
class StageCurve {
public:
    StageCurve(std::vector<std::pair<double, double>> depth_area, std::vector<double> segment_porosity = {});

    /// Detention pond of the reference study: A(h) piecewise linear through
    /// (0, 50), (0.9, 2600), (1.9, 62500), (4.4, 67700), (6.9, 72900).
    static StageCurve reference_pond();

    double area(double h) const;
    double porosity(double h) const;
    /// Exact integral of area * porosity from 0 to h (m3).
    double volume(double h) const;
    /// Inverse of volume(); closed form per segment.
    double depth_for_volume(double v) const;

    bool extrapolated(double h) const { return h > points_.back().first; }
    const std::vector<std::pair<double, double>>& breakpoints() const { return points_; }

private:
    std::size_t segment(double h) const;

    std::vector<std::pair<double, double>> points_;
    std::vector<double> eta_;    // one per segment, the last also used above the top
    std::vector<double> slope_;  // dA/dh per segment
    std::vector<double> cumvol_; // volume at each breakpoint
};

struct OutletDevices {
    double k_o = 5.4039;      ///< orifice coefficient
    double alpha_v = 0.5;
    double h0_orifice = 0.0;  ///< orifice invert above the pond bottom (m)
    double d_h = 1.0;         ///< orifice hydraulic diameter (m)
    double k_s = 27.0;        ///< gated spillway coefficient
    double alpha_s = 1.5;
    double p = 4.4;           ///< spillway crest depth (m)
    double h_max = 6.9;       ///< pond depth at overtopping (m)

    /// Uncontrolled free-crest spillway variant of the same pond.
    static OutletDevices uncontrolled_spillway();

    void validate() const;
    /// Depth below which the orifice carries no flow: h0 + 0.2 d_h.
    double orifice_cutoff() const { return h0_orifice + 0.2 * d_h; }
    double orifice_head(double h) const;
    double spillway_head(double h) const;
};

double orifice_outflow(double h, double u_v, const OutletDevices& dev);
double spillway_outflow(double h, double u_s, const OutletDevices& dev);
/// Combined device outflow (m3/s).
double outflow(double h, double u_v, double u_s, const OutletDevices& dev);

/// Partial derivatives of outflow() with respect to h, u_v and u_s.
struct OutflowJacobian {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

/// Analytic Jacobian. A device whose effective head is zero contributes
/// nothing to alpha (the capped law is flat from below).
OutflowJacobian outflow_jacobian(double h, double u_v, double u_s, const OutletDevices& dev);

/// Discrete affine state-space model about (h*, u_v*, u_s*):
///   h(k+1) = A h + B_v u_v + B_s u_s + phi
///   q(k)   = C h + D_v u_v + D_s u_s + epsilon
struct LinearizedPlant {
    double A = 1.0, B_v = 0.0, B_s = 0.0;
    double C = 0.0, D_v = 0.0, D_s = 0.0;
    double phi = 0.0, epsilon = 0.0;
    double h_star = 0.0, u_v_star = 0.0, u_s_star = 0.0;

    double output(double h, double u_v, double u_s) const { return C * h + D_v * u_v + D_s * u_s + epsilon; }
    double next_depth(double h, double u_v, double u_s) const { return A * h + B_v * u_v + B_s * u_s + phi; }
};

LinearizedPlant linearize(double h_star, double u_v_star, double u_s_star, const OutletDevices& dev,
                          const StageCurve& curve, double dt, double q_in = 0.0);

struct ReservoirState {
    double h = 0.0;
    double u_v = 0.0;
    double u_s = 0.0;
    double detention_clock = 0.0;  ///< s
    double treated_volume = 0.0;   ///< m3
};

/// Rainfall and potential evaporation on the pond surface (m/s).
struct PondForcing {
    double i_p = 0.0;
    double e_p = 0.0;
};

struct ReservoirStep {
    double q_out = 0.0;       ///< devices plus overtopping spill, mean over the step (m3/s)
    double q_orifice = 0.0;   ///< orifice share of q_out
    double q_overtop = 0.0;   ///< spill above h_max
    double rain_volume = 0.0;
    double evap_volume = 0.0;
    bool overtopped = false;
    bool extrapolated = false;  ///< depth left the tabulated curve
};

/// Volume-space explicit step: V' = V + dt (q_in + pond rain - evaporation - q_dev(h)).
/// Device flow is limited so one step cannot draw the pond below the lowest
/// open device's zero-flow depth; volume above h_max leaves as overtopping.
ReservoirStep step_reservoir(ReservoirState& state, double q_in, double dt, const OutletDevices& dev,
                             const StageCurve& curve, const PondForcing& pond = {});

} // namespace stormrtc
