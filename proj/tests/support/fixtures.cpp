#include "support/fixtures.hpp"

#include "stormrtc/timeutil.hpp"

#include <fmt/format.h>

#include <atomic>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace fixtures {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag)
{
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() / fmt::format("stormrtc-{}-{}-{}", tag, ::getpid(), counter++);
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_file(const fs::path& file, const std::string& text)
{
    fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + file.string());
    out << text;
}

std::string read_file(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_gauge_set(const fs::path& dir, const std::vector<stormrtc::GaugeSeries>& gauges)
{
    std::string manifest = "{\"stations\": [";
    for (std::size_t i = 0; i < gauges.size(); ++i) {
        const auto& g = gauges[i];
        std::string csv = "timestamp,value\n";
        for (std::size_t k = 0; k < g.timestamps.size(); ++k)
            csv += fmt::format("{},{}\n", stormrtc::format_iso8601(static_cast<double>(g.timestamps[k])), g.values[k]);
        write_file(dir / (g.id + ".csv"), csv);
        manifest += fmt::format("{}{{\"id\": \"{}\", \"x\": {}, \"y\": {}, \"path\": \"{}.csv\"}}", i ? ", " : "", g.id,
                                g.x, g.y, g.id);
    }
    manifest += "]}\n";
    write_file(dir / "gauges.json", manifest);
    return dir / "gauges.json";
}

fs::path write_climate_set(const fs::path& dir, const std::vector<stormrtc::Station>& stations,
                           const std::vector<std::vector<stormrtc::ClimateDay>>& days)
{
    auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };
    std::string manifest = "{\"stations\": [";
    for (std::size_t i = 0; i < stations.size(); ++i) {
        std::string csv = "date,t_mean_c,rh_pct,u2_ms,rn_mj_m2_day\n";
        for (const auto& d : days[i])
            csv += fmt::format("{},{},{},{},{}\n", stormrtc::format_iso8601(static_cast<double>(d.day_start)).substr(0, 10),
                               opt(d.t_mean_c), opt(d.rh_pct), opt(d.u2_ms), opt(d.rn_mj_m2_day));
        const auto name = fmt::format("climate{}", i + 1);
        write_file(dir / (name + ".csv"), csv);
        manifest += fmt::format("{}{{\"id\": \"{}\", \"x\": {}, \"y\": {}, \"path\": \"{}.csv\"}}", i ? ", " : "", name,
                                stations[i].x, stations[i].y, name);
    }
    manifest += "]}\n";
    write_file(dir / "climate.json", manifest);
    return dir / "climate.json";
}

stormrtc::RasterField tilted_plane(std::size_t ncols, std::size_t nrows, double cellsize, double slope)
{
    stormrtc::GridGeometry g{ncols, nrows, cellsize, 0.0, 0.0, -9999.0};
    stormrtc::RasterField dem(g, 0.0);
    for (std::size_t r = 0; r < nrows; ++r)
        for (std::size_t c = 0; c < ncols; ++c)
            dem.at(r, c) = 100.0 + slope * cellsize * static_cast<double>(ncols - 1 - c);
    return dem;
}

stormrtc::MpcConfig reference_controller()
{
    stormrtc::MpcConfig c;
    c.q_max_minor = 10.0;
    c.q_max_major = 40.0;
    c.alpha_p = 0.5;
    c.dt_detention_s = 18.0 * 3600.0;
    c.q_release = 2.0;
    c.wet_weather_threshold = 1.0;
    return c;
}

double lattice_min_cost(const stormrtc::ReservoirState& state, const stormrtc::HorizonForecast& forecast,
                        const stormrtc::MpcConfig& cfg, const stormrtc::Plant& plant, int levels)
{
    using namespace stormrtc;
    const auto fc = normalize_forecast(forecast, cfg);
    const auto ref = adaptive_reference(fc, cfg);
    const std::size_t np = cfg.prediction_horizon;
    const std::size_t dims = 2 * np;
    std::vector<int> idx(dims, 0);
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
        ControlSchedule s{std::vector<double>(np), std::vector<double>(np)};
        for (std::size_t k = 0; k < np; ++k) {
            s.u_v[k] = idx[k] / double(levels - 1);
            s.u_s[k] = idx[np + k] / double(levels - 1);
        }
        if (schedule_feasible(s, state.u_v, state.u_s, cfg)) {
            const auto traj = simulate_schedule(state, s, fc, cfg, plant);
            best = std::min(best, objective(traj, s, state.u_v, state.u_s, ref, cfg));
        }
        std::size_t d = 0;
        while (d < dims && ++idx[d] == levels)
            idx[d++] = 0;
        if (d == dims)
            break;
    }
    return best;
}

fs::path scenario_dir()
{
    return fs::path(STORMRTC_SOURCE_DIR) / "scenarios";
}

} // namespace fixtures
