#include "stormrtc/mpc.hpp"

#include "stormrtc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stormrtc {

void MpcConfig::validate() const
{
    std::vector<std::string> problems;
    auto need = [&](bool ok, const char* what) {
        if (!ok)
            problems.emplace_back(what);
    };
    need(prediction_horizon >= 1, "prediction_horizon must be >= 1");
    need(control_horizon >= 1 && control_horizon <= prediction_horizon,
         "control_horizon must lie in [1, prediction_horizon]");
    need(control_interval_s > 0.0, "control_interval_s must be positive");
    need(plant_dt_s > 0.0 && plant_dt_s <= control_interval_s, "plant_dt_s must lie in (0, control_interval_s]");
    if (plant_dt_s > 0.0 && control_interval_s > 0.0) {
        const double r = control_interval_s / plant_dt_s;
        need(std::abs(r - std::round(r)) < 1e-9 * r, "control_interval_s must be a multiple of plant_dt_s");
    }
    need(rho_u >= 0.0 && rho_r >= 0.0, "weights rho_u and rho_r must be non-negative");
    need(h_ref >= 0.0, "h_ref_m must be non-negative");
    need(q_max_minor >= 0.0, "q_max_minor_m3s is required and must be non-negative");
    need(q_max_major >= 0.0, "q_max_major_m3s is required and must be non-negative");
    need(q_max_minor <= q_max_major, "q_max_minor_m3s must not exceed q_max_major_m3s");
    need(alpha_p > 0.0 && alpha_p < 1.0, "alpha_p is required and must lie in (0, 1)");
    need(dt_detention_s >= 0.0, "detention_time_s is required and must be non-negative");
    need(q_release >= 0.0, "q_release_m3s is required and must be non-negative");
    need(wet_weather_threshold >= 0.0, "wet_weather_threshold_m3s is required and must be non-negative");
    need(n_starts >= 1, "n_starts must be >= 1");
    need(max_evals_per_start >= 1, "max_evals_per_start must be >= 1");
    need(du_min <= 0.0 && du_max >= 0.0, "rate bounds must satisfy du_min <= 0 <= du_max");
    need(step_initial > 0.0 && step_final > 0.0 && step_final <= step_initial,
         "pattern steps must satisfy 0 < step_final <= step_initial");
    if (!problems.empty()) {
        std::string msg = "invalid controller configuration:";
        for (const auto& p : problems)
            msg += "\n  - " + p;
        throw InvalidInput(msg);
    }
}

std::size_t MpcConfig::samples_per_interval() const
{
    return static_cast<std::size_t>(std::llround(control_interval_s / plant_dt_s));
}

double HorizonForecast::max_inflow() const
{
    double m = 0.0;
    for (double q : q_in)
        m = std::max(m, q);
    return m;
}

AdaptiveReference adaptive_reference(const HorizonForecast& forecast, const MpcConfig& cfg)
{
    const double qm = forecast.max_inflow();
    AdaptiveReference r;
    if (qm <= cfg.q_max_minor) {
        r.q_ref = cfg.alpha_p * qm;
        r.rho_q = 10.0 * cfg.rho_u;
    } else {
        r.q_ref = cfg.q_max_minor;
        r.rho_q = 100.0 * cfg.rho_u;
    }
    r.rho_star = qm >= cfg.q_max_major ? 1000.0 * cfg.rho_u : 0.0;
    return r;
}

double control_energy(const ControlSchedule& s, double prev_u_v, double prev_u_s)
{
    double e = 0.0;
    double pv = prev_u_v, ps = prev_u_s;
    for (std::size_t k = 0; k < s.size(); ++k) {
        e += (s.u_v[k] - pv) * (s.u_v[k] - pv) + (s.u_s[k] - ps) * (s.u_s[k] - ps);
        pv = s.u_v[k];
        ps = s.u_s[k];
    }
    return e;
}

double objective(const Trajectory& traj, const ControlSchedule& sched, double prev_u_v, double prev_u_s,
                 const AdaptiveReference& ref, const MpcConfig& cfg)
{
    double h_exc = 0.0, q_exc = 0.0, q_major = 0.0;
    for (double h : traj.h)
        h_exc = std::max(h_exc, h - cfg.h_ref);
    for (double q : traj.q) {
        q_exc = std::max(q_exc, q - ref.q_ref);
        q_major = std::max(q_major, q - cfg.q_max_major);
    }
    return cfg.rho_u * control_energy(sched, prev_u_v, prev_u_s) + cfg.rho_r * h_exc + ref.rho_q * q_exc
           + ref.rho_star * q_major;
}

std::vector<ControlSchedule> multistart_initials(std::size_t n_r, std::size_t n_p)
{
    if (n_r < 1)
        throw InvalidInput("at least one multistart point is required");
    std::vector<ControlSchedule> out;
    for (std::size_t i = 1; i <= n_r; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n_r);
        out.push_back({std::vector<double>(n_p, u), std::vector<double>(n_p, u)});
    }
    return out;
}

namespace {

void project_series(std::vector<double>& u, double prev, const MpcConfig& cfg)
{
    for (double& x : u) {
        const double lo = std::max(0.0, prev + cfg.du_min);
        const double hi = std::min(1.0, prev + cfg.du_max);
        x = std::clamp(x, lo, hi);
        prev = x;
    }
}

bool series_feasible(const std::vector<double>& u, double prev, const MpcConfig& cfg, double tol)
{
    for (double x : u) {
        if (x < -tol || x > 1.0 + tol || x - prev < cfg.du_min - tol || x - prev > cfg.du_max + tol)
            return false;
        prev = x;
    }
    return true;
}

} // namespace

void project_schedule(ControlSchedule& s, double prev_u_v, double prev_u_s, const MpcConfig& cfg)
{
    project_series(s.u_v, prev_u_v, cfg);
    project_series(s.u_s, prev_u_s, cfg);
}

bool schedule_feasible(const ControlSchedule& s, double prev_u_v, double prev_u_s, const MpcConfig& cfg,
                       double tol)
{
    return s.u_v.size() == s.u_s.size() && series_feasible(s.u_v, prev_u_v, cfg, tol)
           && series_feasible(s.u_s, prev_u_s, cfg, tol);
}

HorizonForecast normalize_forecast(HorizonForecast f, const MpcConfig& cfg)
{
    const std::size_t n = cfg.horizon_samples();
    if (f.q_in.empty())
        f.q_in.push_back(0.0);
    for (double q : f.q_in)
        if (!(q >= 0.0))
            throw InvalidInput("forecast inflow must be non-negative");
    auto pad = [&](std::vector<double>& v) {
        if (!v.empty() && v.size() < n) {
            v.resize(n, v.back());
            f.padded = true;
        }
        if (v.size() > n)
            v.resize(n);
    };
    pad(f.q_in);
    pad(f.i_p);
    pad(f.e_p);
    return f;
}

Trajectory simulate_schedule(const ReservoirState& state, const ControlSchedule& sched,
                             const HorizonForecast& forecast, const MpcConfig& cfg, const Plant& plant)
{
    const std::size_t spi = cfg.samples_per_interval();
    const std::size_t np = sched.size();
    if (forecast.q_in.size() < np * spi)
        throw InvalidInput("forecast does not cover the schedule");
    Trajectory t;
    t.h.assign(np, 0.0);
    t.q.assign(np, 0.0);
    ReservoirState s = state;
    const bool pond = !forecast.i_p.empty() || !forecast.e_p.empty();
    for (std::size_t k = 0; k < np; ++k) {
        s.u_v = sched.u_v[k];
        s.u_s = sched.u_s[k];
        double hmax = 0.0, qmax = 0.0;
        for (std::size_t j = 0; j < spi; ++j) {
            const std::size_t i = k * spi + j;
            PondForcing pf;
            if (pond) {
                pf.i_p = forecast.i_p.empty() ? 0.0 : forecast.i_p[i];
                pf.e_p = forecast.e_p.empty() ? 0.0 : forecast.e_p[i];
            }
            const auto r = step_reservoir(s, forecast.q_in[i], cfg.plant_dt_s, plant.devices, plant.curve, pf);
            hmax = std::max(hmax, s.h);
            qmax = std::max(qmax, r.q_out);
        }
        t.h[k] = hmax;
        t.q[k] = qmax;
    }
    return t;
}

namespace {

struct Direction {
    double dv;           // signed unit move of u_v
    double ds;           // signed unit move of u_s
    std::size_t first;   // affected intervals [first, last)
    std::size_t last;
};

// Whole-horizon moves, then tails in time order, then single intervals.
// Each block polls the valve and gate alone, then moves trading one device
// against the other at a few ratios. Near the crest the gate is far more
// sensitive than the valve, and the optimum of the max-norm terms often sits
// on a ridge that no single-device move can follow.
std::vector<Direction> poll_directions(std::size_t n)
{
    std::vector<Direction> d;
    auto block = [&](std::size_t a, std::size_t b) {
        for (double sign : {1.0, -1.0}) {
            d.push_back({sign, 0.0, a, b});
            d.push_back({0.0, sign, a, b});
        }
        for (double ratio : {1.0, 0.125, 8.0})
            for (double sign : {1.0, -1.0}) {
                d.push_back({sign, -sign * ratio, a, b});
                d.push_back({sign, sign * ratio, a, b});
            }
    };
    block(0, n);
    for (std::size_t k = 1; k < n; ++k)
        block(k, n);
    for (std::size_t k = 0; k + 1 < n; ++k)
        block(k, k + 1);
    return d;
}

struct SearchPoint {
    ControlSchedule x;
    double cost = 0.0;
    double step = 0.0;
    std::size_t cursor = 0;
    std::size_t unsuccessful = 0;
    std::size_t start_index = 0;
};

} // namespace

OptimizeResult optimize_horizon(const ReservoirState& state, const HorizonForecast& raw_forecast,
                                const MpcConfig& cfg, const Plant& plant)
{
    cfg.validate();
    const auto forecast = normalize_forecast(raw_forecast, cfg);
    const std::size_t np = cfg.prediction_horizon;
    const auto ref = adaptive_reference(forecast, cfg);
    const double pv = state.u_v, ps = state.u_s;
    const auto dirs = poll_directions(np);
    const std::size_t budget = cfg.n_starts * cfg.max_evals_per_start;

    OptimizeResult best;
    best.reference = ref;

    auto cost_of = [&](const ControlSchedule& s) {
        ++best.evals;
        return objective(simulate_schedule(state, s, forecast, cfg, plant), s, pv, ps, ref, cfg);
    };

    // Opportunistic polling: a successful direction is tried again, a full
    // unsuccessful cycle halves the step. Stops below `stop_step`, after
    // `cap` evaluations or when the horizon budget is spent.
    auto search = [&](SearchPoint& p, double stop_step, std::size_t cap) {
        std::size_t used = 0;
        while (used < cap && best.evals < budget) {
            if (p.unsuccessful >= dirs.size()) {
                if (p.step * 0.5 < stop_step * (1.0 - 1e-12))
                    return;
                p.step *= 0.5;
                p.unsuccessful = 0;
            }
            const auto& d = dirs[p.cursor];
            ControlSchedule cand = p.x;
            for (std::size_t k = d.first; k < d.last; ++k) {
                cand.u_v[k] += d.dv * p.step;
                cand.u_s[k] += d.ds * p.step;
            }
            project_schedule(cand, pv, ps, cfg);
            if (cand == p.x) {
                p.cursor = (p.cursor + 1) % dirs.size();
                ++p.unsuccessful;
                continue;
            }
            ++used;
            const double fc = cost_of(cand);
            if (fc < p.cost) {
                p.x = std::move(cand);
                p.cost = fc;
                p.unsuccessful = 0;
            } else {
                p.cursor = (p.cursor + 1) % dirs.size();
                ++p.unsuccessful;
            }
        }
    };

    // Coarse pass from every start down to a quarter of the initial step,
    // then the pooled remainder refines the starts in order of cost.
    std::vector<SearchPoint> points;
    const auto initials = multistart_initials(cfg.n_starts, np);
    for (std::size_t i = 0; i < initials.size(); ++i) {
        SearchPoint p;
        p.x = initials[i];
        project_schedule(p.x, pv, ps, cfg);
        p.cost = cost_of(p.x);
        p.step = cfg.step_initial;
        p.start_index = i;
        const double coarse = std::max(cfg.step_initial * 0.25, cfg.step_final);
        search(p, coarse, cfg.max_evals_per_start / 2);
        points.push_back(std::move(p));
    }
    std::stable_sort(points.begin(), points.end(),
                     [](const SearchPoint& a, const SearchPoint& b) { return a.cost < b.cost; });
    for (auto& p : points)
        search(p, cfg.step_final, budget);

    best.cost = std::numeric_limits<double>::infinity();
    double best_energy = std::numeric_limits<double>::infinity();
    std::size_t best_start = 0;
    for (auto& p : points) {
        const double energy = control_energy(p.x, pv, ps);
        const bool better = p.cost < best.cost
                            || (p.cost == best.cost
                                && (energy < best_energy || (energy == best_energy && p.start_index < best_start)));
        if (better) {
            best.cost = p.cost;
            best.schedule = p.x;
            best_energy = energy;
            best_start = p.start_index;
        }
    }
    return best;
}

double detention_release(double h, const MpcConfig& cfg, const OutletDevices& dev)
{
    const double head = dev.orifice_head(h);
    if (head <= 1e-12 || dev.k_o <= 0.0)
        return 1.0;
    return std::min(cfg.q_release / (dev.k_o * std::pow(head, dev.alpha_v)), 1.0);
}

const char* to_string(ControlMode m)
{
    return m == ControlMode::Flood ? "FLOOD" : "QUALITY";
}

Strategy Strategy::fixed(double u)
{
    if (!(u >= 0.0 && u <= 1.0))
        throw InvalidInput("static openness must lie in [0, 1]");
    return {"static_" + std::to_string(static_cast<int>(std::lround(u * 100.0))), false, u};
}

RunTrace run_receding_horizon(const PlantSeries& series, const MpcConfig& cfg, const Plant& plant,
                              const Strategy& strategy, ReservoirState st)
{
    cfg.validate();
    plant.devices.validate();
    if (std::abs(series.dt - cfg.plant_dt_s) > 1e-9)
        throw InvalidInput("inflow series step must equal plant_dt_s");
    if ((!series.i_p.empty() && series.i_p.size() != series.size())
        || (!series.e_p.empty() && series.e_p.size() != series.size()))
        throw InvalidInput("pond forcing series must align with the inflow series");

    RunTrace trace;
    trace.strategy = strategy.name;
    if (!strategy.mpc)
        st.u_v = st.u_s = strategy.openness;
    const double v0 = plant.curve.volume(st.h);
    const std::size_t spi = cfg.samples_per_interval();
    const std::size_t per_horizon = cfg.control_horizon * spi;
    const std::size_t n = series.size();
    const double cutoff = plant.devices.orifice_cutoff();
    const double dt = cfg.plant_dt_s;

    auto slice = [&](const std::vector<double>& v, std::size_t from) {
        if (v.empty())
            return std::vector<double>{};
        const std::size_t to = std::min(v.size(), from + cfg.horizon_samples());
        return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(from),
                                   v.begin() + static_cast<std::ptrdiff_t>(to));
    };

    std::size_t hidx = 0;
    for (std::size_t start = 0; start < n; start += per_horizon, ++hidx) {
        HorizonForecast fc;
        fc.q_in = slice(series.q_in, start);
        fc.i_p = slice(series.i_p, start);
        fc.e_p = slice(series.e_p, start);
        fc = normalize_forecast(std::move(fc), cfg);
        const bool dry = fc.max_inflow() < cfg.wet_weather_threshold;
        if (!dry)
            st.detention_clock = 0.0;

        HorizonRecord rec;
        rec.index = hidx;
        rec.t = series.start + static_cast<double>(start) * dt;
        rec.mode = dry ? ControlMode::Quality : ControlMode::Flood;
        rec.reference = adaptive_reference(fc, cfg);
        rec.forecast_padded = fc.padded;

        ControlSchedule plan;
        if (strategy.mpc && !dry) {
            auto res = optimize_horizon(st, fc, cfg, plant);
            rec.cost = res.cost;
            rec.evals = res.evals;
            plan = std::move(res.schedule);
        }

        for (std::size_t j = 0; j < per_horizon && start + j < n; ++j) {
            const std::size_t i = start + j;
            const bool above = st.h > cutoff;
            const bool eligible = dry && above;
            bool advance = false;
            if (strategy.mpc) {
                if (!dry) {
                    st.u_v = plan.u_v[j / spi];
                    st.u_s = plan.u_s[j / spi];
                } else if (!above) {
                    st.detention_clock = 0.0;
                    st.u_v = st.u_s = 0.0;
                } else if (st.detention_clock < cfg.dt_detention_s) {
                    st.u_v = st.u_s = 0.0;
                    advance = true;
                } else {
                    st.u_v = detention_release(st.h, cfg, plant.devices);
                    st.u_s = 0.0;
                }
            } else {
                if (eligible)
                    advance = true;
                else
                    st.detention_clock = 0.0;
            }
            if (j == 0) {
                rec.u_v_applied = st.u_v;
                rec.u_s_applied = st.u_s;
                rec.detention_clock_s = st.detention_clock;
            }

            StepRecord sr;
            sr.eligible = eligible;
            sr.detention_s = st.detention_clock;
            sr.u_v = st.u_v;
            sr.u_s = st.u_s;
            sr.q_in = series.q_in[i];
            PondForcing pf;
            pf.i_p = series.i_p.empty() ? 0.0 : series.i_p[i];
            pf.e_p = series.e_p.empty() ? 0.0 : series.e_p[i];
            const auto r = step_reservoir(st, series.q_in[i], dt, plant.devices, plant.curve, pf);
            sr.t = series.start + static_cast<double>(i + 1) * dt;
            sr.h = st.h;
            sr.q_out = r.q_out;
            sr.q_orifice = r.q_orifice;
            sr.overtopped = r.overtopped;
            if (eligible)
                st.treated_volume += r.q_orifice * dt;
            if (advance)
                st.detention_clock += dt;

            trace.inflow_volume += series.q_in[i] * dt;
            trace.outflow_volume += r.q_out * dt;
            trace.rain_volume += r.rain_volume;
            trace.evap_volume += r.evap_volume;
            trace.steps.push_back(sr);
        }
        trace.horizons.push_back(rec);
    }
    trace.final_state = st;
    trace.storage_change = plant.curve.volume(st.h) - v0;
    return trace;
}

} // namespace stormrtc
