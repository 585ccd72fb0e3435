#include "stormrtc/error.hpp"
#include "stormrtc/forcing.hpp"
#include "stormrtc/synthetic.hpp"
#include "stormrtc/timeutil.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

using namespace stormrtc;

namespace {

const GridGeometry kUnitCell{1, 1, 1.0, 0.0, 0.0, -9999.0};

IdfCurve scenario_idf()
{
    return IdfCurve{1747.9, 0.181, 15.0, 0.89, 10.0};
}

DesignStormSpec scenario_storm()
{
    DesignStormSpec s;
    s.total_depth_mm = 77.0;
    s.duration_h = 2.0;
    s.block_dt_min = 10.0;
    s.idf = scenario_idf();
    return s;
}

} // namespace

TEST_CASE("idw with one station gives a constant field")
{
    const Station s{37.0, -12.0, 4.25};
    const auto f = idw_interpolate(std::span(&s, 1), GridGeometry{6, 4, 10.0}, 2.0);
    for (double v : f.values)
        CHECK(v == doctest::Approx(4.25));
}

TEST_CASE("idw symmetric pair gives the mean")
{
    const std::vector<Station> st = {{0.5, 3.5, 0.0}, {0.5, -2.5, 10.0}};
    CHECK(idw_interpolate(st, kUnitCell, 2.0)[0] == doctest::Approx(5.0));
}

TEST_CASE("idw weighted examples")
{
    std::vector<Station> st = {{1.5, 0.5, 10.0}, {0.5, 2.5, 4.0}};
    CHECK(idw_interpolate(st, kUnitCell, 2.0)[0] == doctest::Approx(8.8));
    st.push_back({4.5, 0.5, 0.0});
    CHECK(idw_interpolate(st, kUnitCell, 2.0)[0] == doctest::Approx(11.0 / 1.3125));
}

TEST_CASE("idw snaps to a station inside the cell")
{
    const std::vector<Station> st = {{15.2, 14.9, 7.0}, {100.0, 100.0, 1.0}};
    const auto f = idw_interpolate(st, GridGeometry{3, 3, 10.0}, 2.0);
    CHECK(f.at(1, 1) == 7.0);
}

TEST_CASE("idw stays within the station range")
{
    PortableRng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Station> st;
        for (int k = 0; k < 4; ++k)
            st.push_back({rng.uniform(-50, 150), rng.uniform(-50, 150), rng.uniform(0, 20)});
        const auto lo = std::min_element(st.begin(), st.end(), [](auto& a, auto& b) { return a.value < b.value; })->value;
        const auto hi = std::max_element(st.begin(), st.end(), [](auto& a, auto& b) { return a.value < b.value; })->value;
        const auto f = idw_interpolate(st, GridGeometry{10, 10, 10.0}, 2.0);
        for (double v : f.values) {
            CHECK(v >= lo - 1e-12);
            CHECK(v <= hi + 1e-12);
        }
    }
}

TEST_CASE("idw skips missing station values")
{
    const std::vector<Station> st = {{0.5, 3.5, 0.0}, {0.5, -2.5, 10.0}};
    IdwWeights w(kUnitCell, st, 2.0);
    const std::vector<double> vals = {std::nan(""), 10.0};
    CHECK(w.apply(vals)[0] == doctest::Approx(10.0));
    const std::vector<double> none = {std::nan(""), std::nan("")};
    CHECK(w.apply(none)[0] == 0.0);
}

TEST_CASE("idw errors")
{
    std::vector<Station> none;
    CHECK_THROWS_AS(idw_interpolate(none, kUnitCell, 2.0), InvalidInput);
    const Station s{0, 0, 1};
    CHECK_THROWS_AS(idw_interpolate(std::span(&s, 1), kUnitCell, -1.0), InvalidInput);
}

TEST_CASE("alternating blocks for the two-hour 77 mm storm")
{
    const auto h = alternating_blocks(scenario_storm());
    REQUIRE(h.intensity_mm_h.size() == 12);
    CHECK(h.block_dt_s == 600.0);
    CHECK(h.total_depth_mm() == doctest::Approx(77.0));
    const auto& i = h.intensity_mm_h;
    CHECK(std::max_element(i.begin(), i.end()) - i.begin() == 5);
    // second block to the right, third to the left
    CHECK(i[6] > i[4]);
    CHECK(i[4] > i[7]);
    CHECK(i[7] > i[3]);

    auto sorted = i;
    std::sort(sorted.rbegin(), sorted.rend());
    auto inc = incremental_block_depths(scenario_storm());
    std::sort(inc.rbegin(), inc.rend());
    for (std::size_t k = 0; k < inc.size(); ++k)
        CHECK(sorted[k] * 10.0 / 60.0 == doctest::Approx(inc[k]));
    // increments decrease with duration for a concave IDF depth curve
    const auto raw = incremental_block_depths(scenario_storm());
    CHECK(std::is_sorted(raw.rbegin(), raw.rend()));
}

TEST_CASE("uniform storm gives equal blocks")
{
    auto s = scenario_storm();
    s.idf = std::monostate{};
    const auto h = alternating_blocks(s);
    for (double v : h.intensity_mm_h)
        CHECK(v == doctest::Approx(38.5));
}

TEST_CASE("one block storm")
{
    DesignStormSpec s;
    s.total_depth_mm = 30.0;
    s.duration_h = 0.5;
    s.block_dt_min = 30.0;
    s.idf = scenario_idf();
    const auto h = alternating_blocks(s);
    REQUIRE(h.intensity_mm_h.size() == 1);
    CHECK(h.intensity_mm_h[0] == doctest::Approx(60.0));
}

TEST_CASE("depth-duration table storm")
{
    DesignStormSpec s;
    s.total_depth_mm = 20.0;
    s.duration_h = 0.5;
    s.block_dt_min = 10.0;
    s.idf = DepthDurationTable{{{10.0, 8.0}, {20.0, 12.0}, {30.0, 14.0}}};
    const auto inc = incremental_block_depths(s);
    REQUIRE(inc.size() == 3);
    CHECK(inc[0] == doctest::Approx(8.0 * 20.0 / 14.0));
    CHECK(inc[1] == doctest::Approx(4.0 * 20.0 / 14.0));
    CHECK(inc[2] == doctest::Approx(2.0 * 20.0 / 14.0));
    DepthDurationTable t{{{10.0, 8.0}}};
    CHECK(t.depth_mm(5.0) == doctest::Approx(4.0));
    CHECK_THROWS_AS(t.depth_mm(11.0), InvalidInput);
}

TEST_CASE("design storm errors")
{
    auto s = scenario_storm();
    s.block_dt_min = 7.0;
    CHECK_THROWS_AS(alternating_blocks(s), InvalidInput);
    s = scenario_storm();
    s.total_depth_mm = -1.0;
    CHECK_THROWS_AS(alternating_blocks(s), InvalidInput);
    s = scenario_storm();
    s.idf = DepthDurationTable{{{10.0, 8.0}, {20.0, 6.0}, {120.0, 9.0}}};
    CHECK_THROWS_AS(alternating_blocks(s), InvalidInput);
}

TEST_CASE("design storm series places storms at their offsets")
{
    const auto h = alternating_blocks(scenario_storm());
    const std::vector<std::pair<double, Hyetograph>> storms = {{0.0, h}, {21600.0, h}};
    const auto s = design_storm_series(1000.0, 158400.0, storms);
    CHECK(s.step_s == 600.0);
    CHECK(s.end() == doctest::Approx(1000.0 + 158400.0));
    const double depth_m = std::accumulate(s.rate_m_s.begin(), s.rate_m_s.end(), 0.0) * s.step_s;
    CHECK(depth_m == doctest::Approx(0.154));
    CHECK(s.rate_m_s[5] == doctest::Approx(h.intensity_mm_h[5] * kMmPerHourToMetersPerSecond));
    CHECK(s.rate_m_s[12] == 0.0);
    CHECK(s.rate_m_s[36 + 5] == doctest::Approx(s.rate_m_s[5]));
    const std::vector<std::pair<double, Hyetograph>> late = {{158000.0, h}};
    CHECK_THROWS_AS(design_storm_series(0.0, 158400.0, late), InvalidInput);
}

TEST_CASE("fao56 reference day")
{
    const double p = standard_pressure_kpa(0.0);
    CHECK(p == doctest::Approx(101.3).epsilon(1e-3));
    // independent evaluation of the combination equation at sea level
    CHECK(fao56_et0(20.0, 60.0, 2.0, 13.0, 0.0, p) == doctest::Approx(4.477389033658696).epsilon(0.01 / 4.477));
    CHECK(std::abs(fao56_et0(20.0, 60.0, 2.0, 13.0, 0.0, p) - 4.477389033658696) < 0.01);
}

TEST_CASE("fao56 limiting and monotone cases")
{
    const double p = standard_pressure_kpa(0.0);
    CHECK(fao56_et0(20.0, 100.0, 0.0, 0.0, 0.0, p) == doctest::Approx(0.0));
    CHECK(fao56_et0(25.0, 30.0, 4.0, 15.0, 0.0, p) > fao56_et0(25.0, 30.0, 2.0, 15.0, 0.0, p));
    CHECK(fao56_et0(25.0, 60.0, 2.0, 18.0, 0.0, p) > fao56_et0(25.0, 60.0, 2.0, 12.0, 0.0, p));
    CHECK(standard_pressure_kpa(760.0) < p);
}

TEST_CASE("reference ET fills gaps linearly")
{
    const std::int64_t d0 = parse_iso8601("2021-06-01");
    std::vector<ClimateDay> days(4);
    for (std::size_t i = 0; i < days.size(); ++i) {
        days[i].day_start = d0 + static_cast<std::int64_t>(i) * kSecondsPerDay;
        days[i].t_mean_c = 20.0;
        days[i].rh_pct = 60.0;
        days[i].u2_ms = 2.0;
        days[i].rn_mj_m2_day = 10.0 + 2.0 * static_cast<double>(i);
    }
    days[1].u2_ms.reset();
    days[2].rn_mj_m2_day.reset();
    const auto s = reference_evapotranspiration(days);
    CHECK(s.gap_filled == std::vector<bool>{false, true, true, false});
    const double p = standard_pressure_kpa(0.0);
    const double a = fao56_et0(20, 60, 2, 10, 0, p), b = fao56_et0(20, 60, 2, 16, 0, p);
    CHECK(s.et0_mm_day[1] == doctest::Approx(a + (b - a) / 3.0));
    CHECK(s.et0_mm_day[2] == doctest::Approx(a + 2.0 * (b - a) / 3.0));

    days[3].t_mean_c.reset();
    const auto tail = reference_evapotranspiration(days);
    CHECK(tail.et0_mm_day[3] == doctest::Approx(a));
    for (auto& d : days)
        d.rh_pct.reset();
    CHECK_THROWS_AS(reference_evapotranspiration(days), InvalidInput);
}

TEST_CASE("uniform forcing snapshots and bounds")
{
    UniformSeries rain{100.0, 600.0, {1e-6, 2e-6, 0.0}};
    ForcingModel m(GridGeometry{2, 2, 10.0}, rain, 3e-8);
    CHECK(m.start() == 100.0);
    CHECK(m.end() == 1900.0);
    const auto s = m.snapshot_at(750.0);
    CHECK(s.i_p[3] == 2e-6);
    CHECK(s.e_tr[0] == 3e-8);
    CHECK(m.next_change(750.0) == doctest::Approx(1300.0));
    CHECK_THROWS_AS(m.snapshot_at(99.0), OutOfRange);
    CHECK_THROWS_AS(m.snapshot_at(1900.0), OutOfRange);
}

TEST_CASE("gauge forcing composes idw with piecewise-constant records")
{
    const std::int64_t t0 = parse_iso8601("2022-01-01T00:00:00Z");
    auto make = [&](double x, double y, std::vector<double> v) {
        GaugeSeries g;
        g.id = "g";
        g.x = x;
        g.y = y;
        g.interval_s = 600.0;
        for (std::size_t k = 0; k < v.size(); ++k)
            g.timestamps.push_back(t0 + static_cast<std::int64_t>(k) * 600);
        g.values = std::move(v);
        return g;
    };
    // single cell at (0.5, 0.5); gauges at distance 1, 2 and 4
    std::vector<GaugeSeries> gauges = {make(1.5, 0.5, {10.0, 0.0}), make(0.5, 2.5, {4.0, 0.0}),
                                       make(4.5, 0.5, {0.0, 3.6})};
    ForcingModel m(kUnitCell, gauges, 2.0, 0.0);
    const auto s = m.snapshot_at(static_cast<double>(t0) + 10.0);
    CHECK(s.i_p[0] == doctest::Approx(11.0 / 1.3125 * kMmPerHourToMetersPerSecond));
    const auto later = m.snapshot_at(static_cast<double>(t0) + 700.0);
    CHECK(later.i_p[0] == doctest::Approx(3.6 * 0.0625 / 1.3125 * kMmPerHourToMetersPerSecond));
    CHECK(m.next_change(static_cast<double>(t0) + 10.0) == doctest::Approx(static_cast<double>(t0) + 600.0));
    CHECK_THROWS_AS(m.snapshot_at(static_cast<double>(t0) + 1200.0), OutOfRange);

    auto bad = gauges;
    bad[1].values[0] = -1.0;
    CHECK_THROWS_AS(ForcingModel(kUnitCell, bad, 2.0, 0.0), InvalidInput);
}

TEST_CASE("station ET follows the day containing t")
{
    const std::int64_t d0 = parse_iso8601("2022-01-01");
    UniformSeries rain{static_cast<double>(d0), 3600.0, std::vector<double>(48, 0.0)};
    ForcingModel m(GridGeometry{2, 1, 10.0}, rain, 0.0);
    StationEt et;
    et.locations = {{5.0, 5.0, 0.0}};
    Et0Series s;
    s.day_start = {d0, d0 + kSecondsPerDay};
    s.et0_mm_day = {4.32, 8.64};
    s.gap_filled = {false, false};
    et.series = {s};
    m.set_station_et(et, 2.0);
    CHECK(m.snapshot_at(static_cast<double>(d0) + 100.0).e_tr[1] == doctest::Approx(4.32 * kMmPerDayToMetersPerSecond));
    CHECK(m.snapshot_at(static_cast<double>(d0 + kSecondsPerDay) + 5.0).e_tr[0] ==
          doctest::Approx(8.64 * kMmPerDayToMetersPerSecond));
}

TEST_CASE("gauge and climate files round-trip through the manifest readers")
{
    fixtures::TempDir dir("forcing");
    const std::int64_t t0 = parse_iso8601("2022-03-01");
    const std::vector<Station> locs = {{100.0, 200.0, 0.0}, {900.0, 50.0, 0.0}};
    const auto gauges = synthetic_gauges(3, t0, 2.0, locs);
    const auto manifest = fixtures::write_gauge_set(dir.path(), gauges);
    const auto files = read_station_manifest(manifest);
    REQUIRE(files.size() == 2);
    CHECK(files[1].x == 900.0);
    const auto back = read_gauge_csv(files[0].path);
    CHECK(back.id == "gauge1");
    CHECK(back.interval_s == 600.0);
    CHECK(back.timestamps == gauges[0].timestamps);
    for (std::size_t k = 0; k < back.values.size(); ++k)
        CHECK(back.values[k] == doctest::Approx(gauges[0].values[k]));

    const auto climate = synthetic_climate(5, t0, 3);
    const auto cm = fixtures::write_climate_set(dir.path(), {locs[0]}, {climate});
    const auto cf = read_station_manifest(cm);
    const auto days = read_climate_csv(cf[0].path);
    REQUIRE(days.size() == 3);
    CHECK(days[2].day_start == t0 + 2 * kSecondsPerDay);
    CHECK(*days[1].rh_pct == *climate[1].rh_pct);

    fixtures::write_file(dir / "bad.csv", "timestamp,value\n2022-01-01T00:00:00Z,1\n");
    CHECK_THROWS_AS(read_gauge_csv(dir / "bad.csv"), InvalidInput);
    fixtures::write_file(dir / "missing.json", "{\"stations\": [{\"id\": \"a\", \"x\": 0}]}");
    CHECK_THROWS_AS(read_station_manifest(dir / "missing.json"), InvalidInput);
}

TEST_CASE("synthetic gauges are reproducible and share storm timing")
{
    const std::vector<Station> locs = {{0, 0, 0}, {1000, 0, 0}, {0, 1000, 0}};
    const auto a = synthetic_gauges(11, 0, 30.0, locs);
    const auto b = synthetic_gauges(11, 0, 30.0, locs);
    REQUIRE(a.size() == 3);
    CHECK(a[0].values == b[0].values);
    CHECK(a[0].values.size() == 30 * 144);
    std::size_t wet0 = 0, both = 0;
    for (std::size_t k = 0; k < a[0].values.size(); ++k) {
        wet0 += a[0].values[k] > 0.05;
        both += a[0].values[k] > 0.05 && a[1].values[k] > 0.0;
    }
    CHECK(both == wet0);
    CHECK(std::accumulate(a[0].values.begin(), a[0].values.end(), 0.0) > 0.0);
}
