// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include "stormrtc/error.hpp"
#include "stormrtc/indicators.hpp"
#include "stormrtc/mpc.hpp"
#include "stormrtc/reservoir.hpp"
#include "stormrtc/routing.hpp"
#include "stormrtc/scenario.hpp"
#include "stormrtc/synthetic.hpp"
#include "stormrtc/terrain.hpp"
#include "stormrtc/timeutil.hpp"

#include "support/fixtures.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

using namespace stormrtc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

json scenario1_json()
{
    return json::parse(fixtures::read_file(fixtures::scenario_dir() / "scenario1.json"));
}

fs::path write_config(const fs::path& dir, const json& j)
{
    fixtures::write_file(dir / "scenario.json", j.dump(2));
    return dir / "scenario.json";
}

std::vector<std::string> files_under(const fs::path& root)
{
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            out.push_back(fs::relative(e.path(), root).string());
    std::sort(out.begin(), out.end());
    return out;
}

// Steady rain on an impervious 1000 m x 100 m plane.
Outcome equilibrium_plane()
{
    const auto t0 = Clock::now();
    const double cs = 10.0, slope = 0.01, n = 0.02, rain = 50.0 / 3.6e6;
    const auto dem = fixtures::tilted_plane(100, 10, cs, slope);
    const CellIndex outlet = dem.geometry.index(5, 99);
    FlowTopologyOptions opt;
    opt.outlet_slope = slope;
    const auto topo = build_flow_topology(condition_dem(dem, 0.001, outlet), outlet, opt);
    RoutingParams params;
    params.n = RasterField(dem.geometry, n);
    const auto soil = SoilField::uniform(dem.geometry, SoilParams{0.0, 0.0, 0.0, 0.0, 0.0});
    WatershedModel m(topo, soil, params, WatershedState::dry(dem.geometry, 0.0));
    const ForcingSnapshot f{RasterField(dem.geometry, rain), RasterField(dem.geometry, 0.0)};

    // mean discharge over the last hour of a 4 h run
    double vol = 0.0, span = 0.0;
    while (m.state().t < 4.0 * 3600.0) {
        const auto st = m.step(f, 4.0 * 3600.0 - m.state().t);
        if (m.state().t > 3.0 * 3600.0) {
            vol += st.outlet.q_out_w * st.dt;
            span += st.dt;
        }
    }
    const double q = vol / span, expected = rain * 1000.0 * 100.0;
    const double err = std::abs(q - expected) / expected;
    const double secs = seconds_since(t0);
    return {err < 0.01 && secs < 30.0,
            fmt::format("q_eq {:.4f} m3/s vs {:.4f} (error {:.3f}%), {:.1f} s", q, expected, 100.0 * err, secs)};
}

// 24 h design storm over a 100 x 100 pervious valley.
Outcome mass_conservation()
{
    fixtures::TempDir dir("accept-mass");
    auto j = scenario1_json();
    j["duration_s"] = 30 * 3600;
    j["output_dir"] = (dir.path() / "out").string();
    j["terrain"]["synthetic_valley"]["ncols"] = 100;
    j["terrain"]["synthetic_valley"]["nrows"] = 100;
    j["land_use"]["impervious_fraction"] = 0.0;
    j["evapotranspiration"] = {{"constant_mm_day", 4.0}};
    auto storm = j["rainfall"]["design_storms"][0];
    storm["total_depth_mm"] = 150;
    storm["duration_h"] = 24;
    j["rainfall"]["design_storms"] = json::array({storm});
    const auto cfg = load_scenario(write_config(dir.path(), j));
    const auto w = run_watershed(cfg);
    const auto& L = w.ledger;
    const double rel = std::abs(L.residual()) / L.rain;
    return {rel < 1e-3 && L.worst_relative_residual < 1e-3 && L.infiltration > 0.1 * L.rain,
            fmt::format("rain {:.1f} m3 = outflow {:.1f} + infiltration {:.1f} + et {:.1f} + recharge {:.1f} + "
                        "change in surface {:.1f}; closure {:.2e}, worst step {:.2e}",
                        L.rain, L.outflow, L.infiltration, L.et, L.recharge,
                        L.storage_final - L.storage_initial - (L.infiltration - L.recharge), rel,
                        L.worst_relative_residual)};
}

// Analytic outflow derivatives against central differences.
Outcome jacobian_check()
{
    const OutletDevices dev;
    PortableRng rng(1);
    double worst = 0.0;
    int points = 0;
    while (points < 1000) {
        const double h = rng.uniform(0.0, 7.5), uv = rng.uniform(), us = rng.uniform();
        // the device laws have kinks at the cutoff and crest; redraw points within 1 cm
        if (std::abs(h - dev.orifice_cutoff()) < 0.01 || std::abs(h - dev.p) < 0.01 || uv < 1e-5 || us < 1e-5
            || uv > 1 - 1e-5 || us > 1 - 1e-5)
            continue;
        const auto jac = outflow_jacobian(h, uv, us, dev);
        const double e = 1e-6;
        const double fd[3] = {(outflow(h + e, uv, us, dev) - outflow(h - e, uv, us, dev)) / (2 * e),
                              (outflow(h, uv + e, us, dev) - outflow(h, uv - e, us, dev)) / (2 * e),
                              (outflow(h, uv, us + e, dev) - outflow(h, uv, us - e, dev)) / (2 * e)};
        const double an[3] = {jac.alpha, jac.beta, jac.gamma};
        for (int k = 0; k < 3; ++k) {
            const double rel = fd[k] == 0.0 && an[k] == 0.0 ? 0.0 : std::abs(an[k] - fd[k]) / std::abs(fd[k]);
            worst = std::max(worst, rel);
        }
        ++points;
    }
    return {worst < 1e-6, fmt::format("{} points, worst relative error {:.2e}", points, worst)};
}

Outcome stage_curve_check()
{
    const auto c = StageCurve::reference_pond();
    const bool exact = c.area(0.0) == 50.0 && c.area(0.9) == 2600.0 && c.area(1.9) == 62500.0 && c.area(4.4) == 67700.0;
    PortableRng rng(2);
    double worst = 0.0;
    int depths = 0;
    while (depths < 100) {
        const double h = rng.uniform(0.0, 6.9);
        bool near = false;
        for (const auto& bp : c.breakpoints())
            near |= std::abs(h - bp.first) < 1e-4;
        if (near)
            continue;
        const double e = 1e-6;
        const double fd = (c.volume(h + e) - c.volume(h - e)) / (2 * e);
        const double a = c.area(h) * c.porosity(h);
        worst = std::max(worst, std::abs(fd - a) / a);
        ++depths;
    }
    return {exact && worst < 1e-6,
            fmt::format("breakpoint areas {}, dV/dh worst relative error {:.2e} over {} depths",
                        exact ? "exact" : "WRONG", worst, depths)};
}

// Triangular inflow through the fully open pond at two step sizes.
Outcome routing_oracle()
{
    const OutletDevices dev;
    const auto curve = StageCurve::reference_pond();
    const double peak = 148.0, rise = 3600.0, fall = 7200.0, span = 48.0 * 3600.0;
    auto q_in = [&](double t) {
        if (t <= rise)
            return peak * t / rise;
        if (t <= rise + fall)
            return peak * (rise + fall - t) / fall;
        return 0.0;
    };
    // mean inflow over [t, t + dt] by the trapezoid rule on a fine grid
    auto mean_in = [&](double t, double dt) {
        const int n = 60;
        double s = 0.0;
        for (int k = 0; k < n; ++k)
            s += 0.5 * (q_in(t + dt * k / n) + q_in(t + dt * (k + 1) / n));
        return s / n;
    };
    auto route = [&](double dt) {
        ReservoirState st{0.0, 1.0, 1.0, 0.0, 0.0};
        double qmax = 0.0, vol = 0.0;
        const auto n = static_cast<std::size_t>(span / dt);
        for (std::size_t k = 0; k < n; ++k) {
            const auto r = step_reservoir(st, mean_in(static_cast<double>(k) * dt, dt), dt, dev, curve);
            qmax = std::max(qmax, r.q_out);
            vol += r.q_out * dt;
        }
        return std::pair{qmax, vol};
    };
    const auto [p60, v60] = route(60.0);
    const auto [p1, v1] = route(1.0);
    const double ep = std::abs(p60 - p1) / p1, ev = std::abs(v60 - v1) / v1;
    return {ep < 0.01 && ev < 0.001,
            fmt::format("peak {:.3f} vs {:.3f} m3/s ({:.3f}%), volume {:.0f} vs {:.0f} m3 ({:.4f}%)", p60, p1,
                        100.0 * ep, v60, v1, 100.0 * ev)};
}

// Two-interval horizons: pattern search against an 11-level lattice.
Outcome optimizer_check()
{
    auto cfg = fixtures::reference_controller();
    cfg.prediction_horizon = 2;
    const Plant plant;
    PortableRng rng(6);
    double worst_gap = -1e300;
    std::size_t max_evals = 0;
    for (int trial = 0; trial < 50; ++trial) {
        ReservoirState st{rng.uniform(0.0, 6.5), rng.uniform(), rng.uniform(), 0.0, 0.0};
        HorizonForecast fc;
        const double a = rng.uniform(0.0, 148.0), b = rng.uniform(0.0, 148.0);
        const auto n = cfg.horizon_samples();
        for (std::size_t k = 0; k < n; ++k)
            fc.q_in.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
        const auto res = optimize_horizon(st, fc, cfg, plant);
        worst_gap = std::max(worst_gap, res.cost - fixtures::lattice_min_cost(st, fc, cfg, plant, 11));
        max_evals = std::max(max_evals, res.evals);
    }
    // budget at the full 12-interval horizon
    const auto full = fixtures::reference_controller();
    HorizonForecast fc;
    fc.q_in.assign(full.horizon_samples(), 120.0);
    const auto res = optimize_horizon(ReservoirState{2.0, 0.3, 0.0, 0.0, 0.0}, fc, full, plant);
    const std::size_t budget = full.n_starts * full.max_evals_per_start;
    return {worst_gap <= 1e-6 && max_evals <= budget && res.evals <= budget,
            fmt::format("worst (search - lattice) cost {:.3e} over 50 states; evals {} (2-interval) and {} "
                        "(12-interval) within budget {}",
                        worst_gap, max_evals, res.evals, budget)};
}

struct ScenarioRun {
    ScenarioResult result;
    double seconds = 0.0;
};

ScenarioRun run_scenario1(const fs::path& out)
{
    auto cfg = load_scenario(fixtures::scenario_dir() / "scenario1.json");
    cfg.output_dir = out;
    const auto t0 = Clock::now();
    ScenarioRun r{run_scenario(cfg), 0.0};
    r.seconds = seconds_since(t0);
    return r;
}

Outcome scenario1_direction()
{
    fixtures::TempDir dir("accept-s1");
    const auto run = run_scenario1(dir.path() / "out");
    const auto cfg = load_scenario(fixtures::scenario_dir() / "scenario1.json");
    const RunTrace* mpc = nullptr;
    const RunTrace* passive = nullptr;
    for (const auto& t : run.result.traces) {
        if (t.strategy == "mpc")
            mpc = &t;
        if (t.strategy == "static_100")
            passive = &t;
    }
    if (!mpc || !passive)
        return {false, "missing mpc or static_100 trace"};
    const auto im = indicators_from_trace(*mpc, cfg.controller, cfg.controller.plant_dt_s);
    const auto ip = indicators_from_trace(*passive, cfg.controller, cfg.controller.plant_dt_s);
    double worst_q = 0.0;
    for (const auto& s : mpc->steps)
        if (!s.overtopped)
            worst_q = std::max(worst_q, s.q_out);
    std::size_t max_evals = 0;
    for (const auto& h : mpc->horizons)
        max_evals = std::max(max_evals, h.evals);
    const double margin = im.reduction_pct - ip.reduction_pct;
    const bool ok = margin >= 15.0 && worst_q <= cfg.controller.q_max_major && run.seconds < 300.0
                    && max_evals <= cfg.controller.n_starts * cfg.controller.max_evals_per_start;
    return {ok, fmt::format("peak inflow {:.1f} m3/s; reduction mpc {:.1f}% vs passive {:.1f}% (margin {:.1f} pp); "
                            "mpc max outflow {:.2f} m3/s, {} overtopping steps; max evals {}; {:.1f} s",
                            im.peak_inflow, im.reduction_pct, ip.reduction_pct, margin, worst_q,
                            im.overtopping_steps, max_evals, run.seconds)};
}

// Isolated storm, then a long dry spell with ample pond capacity.
Outcome detention_property()
{
    const auto cfg = fixtures::reference_controller();
    const Plant plant;
    PlantSeries s;
    s.dt = cfg.plant_dt_s;
    const std::size_t n = 96 * 60;
    s.q_in.assign(n, 0.0);
    for (std::size_t k = 0; k < 120; ++k)
        s.q_in[k] = 20.0 * (k < 40 ? double(k) / 40.0 : double(120 - k) / 80.0);
    const auto t = run_receding_horizon(s, cfg, plant, Strategy::model_predictive());
    std::vector<double> q, det;
    std::vector<bool> elig;
    double worst_release = 0.0, hmax = 0.0;
    for (const auto& st : t.steps) {
        q.push_back(st.q_orifice);
        det.push_back(st.detention_s);
        elig.push_back(st.eligible);
        hmax = std::max(hmax, st.h);
        if (st.eligible)
            worst_release = std::max(worst_release, st.q_out);
    }
    const auto avg = average_detention_time(q, det, elig, s.dt);
    const double treated = treated_volume(q, elig, s.dt);
    const bool ok = avg && std::abs(*avg - cfg.dt_detention_s) <= cfg.control_interval_s
                    && worst_release <= cfg.q_release + 1e-9 && treated > 0.5 * t.inflow_volume;
    return {ok, fmt::format("average detention {} h (target {:.1f} h), release max {:.3f} m3/s (q_t* {:.1f}), "
                            "treated {:.0f} of {:.0f} m3, peak depth {:.2f} m",
                            avg ? fmt::format("{:.2f}", *avg / 3600.0) : std::string("n/a"),
                            cfg.dt_detention_s / 3600.0, worst_release, cfg.q_release, treated, t.inflow_volume, hmax)};
}

Outcome determinism()
{
    fixtures::TempDir dir("accept-det");
    const auto a = run_scenario1(dir.path() / "a");
    const auto b = run_scenario1(dir.path() / "b");
    const auto fa = files_under(a.result.output_dir);
    if (fa != files_under(b.result.output_dir))
        return {false, "file sets differ"};
    for (const auto& f : fa)
        if (fixtures::read_file(a.result.output_dir / f) != fixtures::read_file(b.result.output_dir / f))
            return {false, "differs: " + f};
    return {true, fmt::format("{} files byte-identical across two runs", fa.size())};
}

// 30 days of synthetic gauge data through the whole pipeline.
Outcome month_run()
{
    fixtures::TempDir dir("accept-month");
    const std::int64_t t0 = parse_iso8601("2021-11-01");
    const std::vector<Station> locs = {{300.0, 2700.0, 0.0}, {2600.0, 2400.0, 0.0}, {1500.0, 600.0, 0.0}};
    const auto gauges = synthetic_gauges(2021, t0, 30.0, locs);
    fixtures::write_gauge_set(dir.path() / "gauges", gauges);
    std::vector<std::vector<ClimateDay>> climate = {synthetic_climate(7, t0, 30), synthetic_climate(8, t0, 30)};
    fixtures::write_climate_set(dir.path() / "climate", {locs[0], locs[2]}, climate);

    auto j = scenario1_json();
    j["name"] = "month of gauge data";
    j["start"] = format_iso8601(static_cast<double>(t0));
    j["duration_s"] = 30 * 86400;
    j["output_dir"] = "out";
    j["terrain"]["synthetic_valley"]["ncols"] = 100;
    j["terrain"]["synthetic_valley"]["nrows"] = 100;
    j["rainfall"] = {{"gauge_manifest", "gauges/gauges.json"}, {"idw_exponent", 2}};
    j["evapotranspiration"] = {{"climate_manifest", "climate/climate.json"}, {"elevation_m", 760}};
    const auto t_start = Clock::now();
    const auto r = run_scenario(load_scenario(write_config(dir.path(), j)));
    const double secs = seconds_since(t_start);
    const auto& L = r.watershed.ledger;
    const double rel = std::abs(L.residual()) / std::max(L.rain, 1e-300);
    double passive_peak = 0.0;
    for (const auto& t : r.traces)
        for (const auto& s : t.steps)
            if (t.strategy == "static_100")
                passive_peak = std::max(passive_peak, s.q_out);
    const bool ok = r.traces.size() == 5 && secs < 600.0 && L.rain > 0.0 && rel < 1e-3
                    && L.worst_relative_residual < 1e-3;
    return {ok, fmt::format("{} strategies, {} watershed steps, rain {:.0f} m3, ET {:.0f} m3, closure {:.2e}, "
                            "worst step {:.2e}, passive peak outflow {:.2f} m3/s, {:.1f} s",
                            r.traces.size(), r.watershed.steps, L.rain, L.et, rel, L.worst_relative_residual,
                            passive_peak, secs)};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"kinematic-wave equilibrium", equilibrium_plane},
        {"watershed mass conservation", mass_conservation},
        {"outflow Jacobian", jacobian_check},
        {"stage curve", stage_curve_check},
        {"reservoir routing step size", routing_oracle},
        {"optimizer soundness and budget", optimizer_check},
        {"two-storm scenario direction", scenario1_direction},
        {"detention time", detention_property},
        {"determinism", determinism},
        {"month-scale run", month_run},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        fmt::print("{} {:>2} {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail);
        std::fflush(stdout);
    }
    return failures ? 1 : 0;
}
