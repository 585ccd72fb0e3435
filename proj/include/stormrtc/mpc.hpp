#pragma once

#include "stormrtc/reservoir.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace stormrtc {

struct MpcConfig {
    std::size_t prediction_horizon = 12;  ///< N_p, control intervals
    std::size_t control_horizon = 2;      ///< intervals applied before re-planning
    double control_interval_s = 3600.0;
    double plant_dt_s = 60.0;
    double rho_u = 1.0;
    double rho_r = 100.0;
    double h_ref = 4.4;
    // Site thresholds; there are no defaults for these.
    double q_max_minor = -1.0;   ///< q*_max
    double q_max_major = -1.0;   ///< q**_max
    double alpha_p = -1.0;
    double dt_detention_s = -1.0;
    double q_release = -1.0;     ///< q_t*
    double wet_weather_threshold = -1.0;
    std::size_t n_starts = 5;
    std::size_t max_evals_per_start = 120;  ///< times n_starts gives the pooled horizon budget
    double du_min = -1.0;
    double du_max = 1.0;
    double step_initial = 0.5;
    double step_final = 1.0 / 64.0;

    /// Throws InvalidInput listing every violated constraint.
    void validate() const;
    std::size_t samples_per_interval() const;
    std::size_t horizon_samples() const { return prediction_horizon * samples_per_interval(); }
};

/// Openness per control interval; entries are held over the whole interval.
struct ControlSchedule {
    std::vector<double> u_v;
    std::vector<double> u_s;

    std::size_t size() const { return u_v.size(); }
    bool operator==(const ControlSchedule&) const = default;
};

/// Perfect forecast over the prediction horizon at plant resolution.
struct HorizonForecast {
    std::vector<double> q_in;  ///< m3/s
    std::vector<double> i_p;   ///< pond-surface rainfall, m/s (may be empty)
    std::vector<double> e_p;   ///< pond-surface potential evaporation, m/s (may be empty)
    bool padded = false;       ///< extended with its last value to cover the horizon

    double max_inflow() const;
};

struct AdaptiveReference {
    double q_ref = 0.0;
    double rho_q = 0.0;
    double rho_star = 0.0;
};

AdaptiveReference adaptive_reference(const HorizonForecast& forecast, const MpcConfig& cfg);

/// Per-interval maxima of depth and outflow over the plant sub-steps.
struct Trajectory {
    std::vector<double> h;
    std::vector<double> q;
};

/// Sum of squared openness increments, including the step from the previous controls.
double control_energy(const ControlSchedule& s, double prev_u_v, double prev_u_s);

double objective(const Trajectory& traj, const ControlSchedule& sched, double prev_u_v, double prev_u_s,
                 const AdaptiveReference& ref, const MpcConfig& cfg);

/// n_r constant schedules at i / n_r, i = 1..n_r.
std::vector<ControlSchedule> multistart_initials(std::size_t n_r, std::size_t n_p);

struct Plant {
    StageCurve curve = StageCurve::reference_pond();
    OutletDevices devices;
};

/// Clips to [0, 1] and enforces the rate bounds in time order, starting from the previous controls.
void project_schedule(ControlSchedule& s, double prev_u_v, double prev_u_s, const MpcConfig& cfg);

bool schedule_feasible(const ControlSchedule& s, double prev_u_v, double prev_u_s, const MpcConfig& cfg,
                       double tol = 1e-12);

/// Runs the nonlinear plant under the schedule over the forecast.
Trajectory simulate_schedule(const ReservoirState& state, const ControlSchedule& sched,
                             const HorizonForecast& forecast, const MpcConfig& cfg, const Plant& plant);

/// Pads or validates the forecast so it spans the prediction horizon.
HorizonForecast normalize_forecast(HorizonForecast forecast, const MpcConfig& cfg);

struct OptimizeResult {
    ControlSchedule schedule;
    double cost = 0.0;
    std::size_t evals = 0;
    AdaptiveReference reference;
};

/// Multi-start projected pattern search over (u_v, u_s) per interval. The
/// n_starts * max_evals_per_start evaluations are pooled over the horizon:
/// each start gets a coarse pass, the remainder refines the best starts.
OptimizeResult optimize_horizon(const ReservoirState& state, const HorizonForecast& forecast,
                                const MpcConfig& cfg, const Plant& plant);

/// Valve opening that releases at most q_t* through the orifice at depth h.
double detention_release(double h, const MpcConfig& cfg, const OutletDevices& dev);

enum class ControlMode { Flood, Quality };

const char* to_string(ControlMode m);

/// Inputs at plant resolution for a whole run.
struct PlantSeries {
    double start = 0.0;
    double dt = 60.0;
    std::vector<double> q_in;
    std::vector<double> i_p;  ///< optional pond-surface forcing
    std::vector<double> e_p;

    std::size_t size() const { return q_in.size(); }
};

struct Strategy {
    std::string name;
    bool mpc = false;
    double openness = 1.0;  ///< static strategies only

    static Strategy model_predictive() { return {"mpc", true, 1.0}; }
    static Strategy fixed(double u);
};

struct StepRecord {
    double t = 0.0;  ///< end of the plant step
    double h = 0.0;  ///< depth at the end of the step
    double u_v = 0.0;
    double u_s = 0.0;
    double q_in = 0.0;
    double q_out = 0.0;
    double q_orifice = 0.0;
    bool overtopped = false;
    bool eligible = false;       ///< forecast null and pond above the orifice cutoff
    double detention_s = 0.0;    ///< clock value credited to this step's release
};

struct HorizonRecord {
    std::size_t index = 0;
    double t = 0.0;
    ControlMode mode = ControlMode::Flood;
    double cost = 0.0;
    std::size_t evals = 0;
    double u_v_applied = 0.0;
    double u_s_applied = 0.0;
    AdaptiveReference reference;
    double detention_clock_s = 0.0;
    bool forecast_padded = false;
};

struct RunTrace {
    std::string strategy;
    std::vector<StepRecord> steps;
    std::vector<HorizonRecord> horizons;
    ReservoirState final_state;
    double inflow_volume = 0.0;
    double outflow_volume = 0.0;
    double rain_volume = 0.0;
    double evap_volume = 0.0;
    double storage_change = 0.0;
};

/// Receding-horizon loop. MPC strategies re-plan every control horizon with a
/// perfect forecast; static strategies hold u_v = u_s = openness.
RunTrace run_receding_horizon(const PlantSeries& series, const MpcConfig& cfg, const Plant& plant,
                              const Strategy& strategy, ReservoirState initial = {});

} // namespace stormrtc
