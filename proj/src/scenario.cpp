#include "stormrtc/scenario.hpp"

#include "stormrtc/ascii_grid.hpp"
#include "stormrtc/csv.hpp"
#include "stormrtc/error.hpp"
#include "stormrtc/indicators.hpp"
#include "stormrtc/timeutil.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace stormrtc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing. Every problem is collected; parsing continues past errors.

class Parser {
public:
    explicit Parser(fs::path base) : base_(std::move(base)) {}

    std::vector<std::string> problems;

    void problem(const std::string& where, const std::string& what) { problems.push_back(where + ": " + what); }

    void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys)
    {
        if (!obj.is_object())
            return;
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, v] : obj.items())
            if (!ok.count(k))
                problem(where, "unknown key \"" + k + "\"");
    }

    const json* object(const json& parent, const std::string& key, const std::string& where, bool required)
    {
        if (!parent.contains(key)) {
            if (required)
                problem(where, "missing section \"" + key + "\"");
            return nullptr;
        }
        const json& v = parent[key];
        if (!v.is_object()) {
            problem(where + "." + key, "expected an object");
            return nullptr;
        }
        return &v;
    }

    /// Numeric field. `def` absent means required.
    double number(const json& obj, const std::string& key, const std::string& where, std::optional<double> def,
                  const std::function<bool(double)>& ok = {}, const char* rule = "")
    {
        if (!obj.contains(key)) {
            if (!def) {
                problem(where, "missing required field \"" + key + "\"");
                return std::numeric_limits<double>::quiet_NaN();
            }
            return *def;
        }
        const json& v = obj[key];
        if (!v.is_number()) {
            problem(where + "." + key, "expected a number");
            return def.value_or(std::numeric_limits<double>::quiet_NaN());
        }
        const double x = v.get<double>();
        if (ok && !ok(x))
            problem(where + "." + key, std::string("value ") + fmt::format("{}", x) + " violates " + rule);
        return x;
    }

    std::size_t count(const json& obj, const std::string& key, const std::string& where, std::optional<std::size_t> def,
                      std::size_t min_value = 0)
    {
        if (!obj.contains(key)) {
            if (!def)
                problem(where, "missing required field \"" + key + "\"");
            return def.value_or(0);
        }
        const json& v = obj[key];
        if (!v.is_number_integer() || v.get<std::int64_t>() < static_cast<std::int64_t>(min_value)) {
            problem(where + "." + key, "expected an integer >= " + std::to_string(min_value));
            return def.value_or(min_value);
        }
        return v.get<std::size_t>();
    }

    std::string string(const json& obj, const std::string& key, const std::string& where, bool required)
    {
        if (!obj.contains(key)) {
            if (required)
                problem(where, "missing required field \"" + key + "\"");
            return {};
        }
        if (!obj[key].is_string()) {
            problem(where + "." + key, "expected a string");
            return {};
        }
        return obj[key].get<std::string>();
    }

    fs::path file(const json& obj, const std::string& key, const std::string& where, bool required)
    {
        const auto s = string(obj, key, where, required);
        if (s.empty())
            return {};
        fs::path p(s);
        if (p.is_relative())
            p = base_ / p;
        if (!fs::exists(p))
            problem(where + "." + key, "file not found: " + p.string());
        return p;
    }

    const fs::path& base() const { return base_; }

private:
    fs::path base_;
};

const auto positive = [](double x) { return x > 0.0; };
const auto non_negative = [](double x) { return x >= 0.0; };

void parse_terrain(Parser& p, const json& root, ScenarioConfig& c)
{
    const auto* t = p.object(root, "terrain", "config", true);
    if (!t)
        return;
    p.allow_keys(*t, "terrain", {"synthetic_valley", "dem", "outlet_row", "outlet_col", "min_slope", "outlet_slope"});
    c.min_slope = p.number(*t, "min_slope", "terrain", 1e-3, positive, "> 0");
    if (t->contains("outlet_slope"))
        c.outlet_slope = p.number(*t, "outlet_slope", "terrain", std::nullopt, positive, "> 0");
    if (const auto* v = p.object(*t, "synthetic_valley", "terrain", false)) {
        const std::string w = "terrain.synthetic_valley";
        p.allow_keys(*v, w, {"ncols", "nrows", "cellsize_m", "axis_slope", "side_slope", "base_elevation_m"});
        ValleySpec s;
        s.ncols = p.count(*v, "ncols", w, s.ncols, 1);
        s.nrows = p.count(*v, "nrows", w, s.nrows, 1);
        s.cellsize = p.number(*v, "cellsize_m", w, s.cellsize, positive, "> 0");
        s.axis_slope = p.number(*v, "axis_slope", w, s.axis_slope, positive, "> 0");
        s.side_slope = p.number(*v, "side_slope", w, s.side_slope, non_negative, ">= 0");
        s.base_elevation = p.number(*v, "base_elevation_m", w, s.base_elevation);
        c.valley = s;
        if (t->contains("dem"))
            p.problem("terrain", "give either \"synthetic_valley\" or \"dem\", not both");
        return;
    }
    c.dem_path = p.file(*t, "dem", "terrain", true);
    const bool has_row = t->contains("outlet_row"), has_col = t->contains("outlet_col");
    if (has_row != has_col)
        p.problem("terrain", "outlet_row and outlet_col must be given together");
    if (has_row && has_col && !c.dem_path.empty() && fs::exists(c.dem_path)) {
        const auto r = p.count(*t, "outlet_row", "terrain", std::nullopt);
        const auto col = p.count(*t, "outlet_col", "terrain", std::nullopt);
        try {
            const auto dem = read_ascii_grid(c.dem_path);
            if (r >= dem.geometry.nrows || col >= dem.geometry.ncols)
                p.problem("terrain", "outlet cell lies outside the DEM");
            else
                c.outlet = dem.geometry.index(r, col);
        } catch (const std::exception& e) {
            p.problem("terrain.dem", e.what());
        }
    }
}

void parse_surface(Parser& p, const json& root, ScenarioConfig& c)
{
    if (const auto* lu = p.object(root, "land_use", "config", false)) {
        p.allow_keys(*lu, "land_use",
                     {"manning_n", "classes", "manning_n_by_class", "impervious_fraction", "impervious_manning_n",
                      "impervious_h0_m"});
        if (lu->contains("classes")) {
            c.land_use_path = p.file(*lu, "classes", "land_use", true);
            if (const auto* m = p.object(*lu, "manning_n_by_class", "land_use", true)) {
                for (const auto& [k, v] : m->items()) {
                    try {
                        const int id = std::stoi(k);
                        if (!v.is_number() || !(v.get<double>() > 0.0))
                            p.problem("land_use.manning_n_by_class." + k, "expected a positive number");
                        else
                            c.manning_by_class[id] = v.get<double>();
                    } catch (const std::exception&) {
                        p.problem("land_use.manning_n_by_class", "class key \"" + k + "\" is not an integer");
                    }
                }
            }
        } else {
            c.manning_n = p.number(*lu, "manning_n", "land_use", c.manning_n, positive, "> 0");
            c.impervious_fraction = p.number(*lu, "impervious_fraction", "land_use", 0.0,
                                             [](double x) { return x >= 0 && x <= 1; }, "0 <= fraction <= 1");
            c.impervious_manning_n =
                p.number(*lu, "impervious_manning_n", "land_use", c.impervious_manning_n, positive, "> 0");
            c.impervious_h0_m = p.number(*lu, "impervious_h0_m", "land_use", c.impervious_h0_m, non_negative, ">= 0");
        }
    }

    if (const auto* s = p.object(root, "soil", "config", true)) {
        p.allow_keys(*s, "soil", {"psi_m", "ksat_m_s", "dtheta", "h0_m", "recharge_m_s", "classes", "table"});
        if (s->contains("classes") || s->contains("table")) {
            c.soil_class_path = p.file(*s, "classes", "soil", true);
            c.soil_table_path = p.file(*s, "table", "soil", true);
        } else {
            c.soil.psi = p.number(*s, "psi_m", "soil", std::nullopt, non_negative, ">= 0");
            c.soil.ksat = p.number(*s, "ksat_m_s", "soil", std::nullopt, non_negative, ">= 0");
            c.soil.dtheta = p.number(*s, "dtheta", "soil", std::nullopt, [](double x) { return x >= 0 && x <= 1; },
                                     "0 <= dtheta <= 1");
            c.soil.h0 = p.number(*s, "h0_m", "soil", 0.0, non_negative, ">= 0");
            c.soil.recharge_rate = p.number(*s, "recharge_m_s", "soil", 0.0, non_negative, ">= 0");
        }
    }

    if (const auto* r = p.object(root, "routing", "config", false)) {
        p.allow_keys(*r, "routing", {"cfl", "dt_min_s", "dt_max_s"});
        c.cfl = p.number(*r, "cfl", "routing", c.cfl, [](double x) { return x > 0 && x <= 1; }, "0 < cfl <= 1");
        c.dt_min_s = p.number(*r, "dt_min_s", "routing", c.dt_min_s, positive, "> 0");
        c.dt_max_s = p.number(*r, "dt_max_s", "routing", c.dt_max_s, positive, "> 0");
        if (c.dt_min_s > c.dt_max_s)
            p.problem("routing", "dt_min_s exceeds dt_max_s");
    }
}

void parse_forcing(Parser& p, const json& root, ScenarioConfig& c)
{
    if (const auto* r = p.object(root, "rainfall", "config", true)) {
        p.allow_keys(*r, "rainfall", {"design_storms", "gauge_manifest", "idw_exponent"});
        c.idw_exponent = p.number(*r, "idw_exponent", "rainfall", 2.0, positive, "> 0");
        if (r->contains("design_storms")) {
            const auto& arr = (*r)["design_storms"];
            if (!arr.is_array())
                p.problem("rainfall.design_storms", "expected an array");
            std::size_t i = 0;
            for (const auto& s : arr.is_array() ? arr : json::array()) {
                const std::string w = "rainfall.design_storms[" + std::to_string(i++) + "]";
                p.allow_keys(s, w, {"offset_s", "total_depth_mm", "duration_h", "block_dt_min", "idf", "depth_duration"});
                DesignStormSpec spec;
                const double offset = p.number(s, "offset_s", w, 0.0, non_negative, ">= 0");
                spec.total_depth_mm = p.number(s, "total_depth_mm", w, std::nullopt, positive, "> 0");
                spec.duration_h = p.number(s, "duration_h", w, std::nullopt, positive, "> 0");
                spec.block_dt_min = p.number(s, "block_dt_min", w, 10.0, positive, "> 0");
                if (const auto* idf = p.object(s, "idf", w, false)) {
                    p.allow_keys(*idf, w + ".idf", {"k", "a", "b", "c", "return_period_years"});
                    IdfCurve curve;
                    curve.k = p.number(*idf, "k", w + ".idf", std::nullopt, positive, "> 0");
                    curve.a = p.number(*idf, "a", w + ".idf", std::nullopt);
                    curve.b = p.number(*idf, "b", w + ".idf", std::nullopt, non_negative, ">= 0");
                    curve.c = p.number(*idf, "c", w + ".idf", std::nullopt, non_negative, ">= 0");
                    curve.return_period_years = p.number(*idf, "return_period_years", w + ".idf", 10.0, positive, "> 0");
                    spec.idf = curve;
                } else if (s.contains("depth_duration")) {
                    DepthDurationTable table;
                    const auto& pts = s["depth_duration"];
                    bool ok = pts.is_array() && !pts.empty();
                    for (const auto& pt : ok ? pts : json::array()) {
                        if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
                            ok = false;
                            break;
                        }
                        table.points.emplace_back(pt[0].get<double>(), pt[1].get<double>());
                    }
                    if (!ok)
                        p.problem(w + ".depth_duration", "expected [[minutes, mm], ...]");
                    spec.idf = table;
                }
                try {
                    if (std::isfinite(spec.total_depth_mm) && std::isfinite(spec.duration_h)) {
                        spec.block_count();
                        incremental_block_depths(spec);
                    }
                } catch (const std::exception& e) {
                    p.problem(w, e.what());
                }
                c.storms.emplace_back(offset, spec);
            }
        } else {
            c.gauge_manifest = p.file(*r, "gauge_manifest", "rainfall", true);
        }
    }

    if (const auto* e = p.object(root, "evapotranspiration", "config", false)) {
        p.allow_keys(*e, "evapotranspiration", {"constant_mm_day", "climate_manifest", "elevation_m"});
        if (e->contains("climate_manifest")) {
            c.climate_manifest = p.file(*e, "climate_manifest", "evapotranspiration", true);
            c.elevation_m = p.number(*e, "elevation_m", "evapotranspiration", 0.0);
        } else {
            c.et_constant_mm_day = p.number(*e, "constant_mm_day", "evapotranspiration", 0.0, non_negative, ">= 0");
        }
    }
}

void parse_reservoir(Parser& p, const json& root, ScenarioConfig& c)
{
    const auto* r = p.object(root, "reservoir", "config", false);
    if (!r)
        return;
    p.allow_keys(*r, "reservoir", {"stage_area_m_m2", "porosity", "devices", "initial_depth_m", "pond_surface_forcing"});
    if (r->contains("stage_area_m_m2")) {
        std::vector<std::pair<double, double>> pts;
        std::vector<double> eta;
        const auto& arr = (*r)["stage_area_m_m2"];
        bool ok = arr.is_array();
        for (const auto& pt : ok ? arr : json::array()) {
            if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
                ok = false;
                break;
            }
            pts.emplace_back(pt[0].get<double>(), pt[1].get<double>());
        }
        if (r->contains("porosity")) {
            const auto& pe = (*r)["porosity"];
            if (!pe.is_array())
                p.problem("reservoir.porosity", "expected an array");
            for (const auto& v : pe.is_array() ? pe : json::array())
                eta.push_back(v.is_number() ? v.get<double>() : -1.0);
        }
        if (!ok) {
            p.problem("reservoir.stage_area_m_m2", "expected [[depth_m, area_m2], ...]");
        } else {
            try {
                c.plant.curve = StageCurve(pts, eta);
            } catch (const std::exception& e) {
                p.problem("reservoir.stage_area_m_m2", e.what());
            }
        }
    }
    if (const auto* d = p.object(*r, "devices", "reservoir", false)) {
        const std::string w = "reservoir.devices";
        p.allow_keys(*d, w, {"k_o", "alpha_v", "h0_orifice_m", "d_h_m", "k_s", "alpha_s", "p_m", "h_max_m"});
        auto& dev = c.plant.devices;
        dev.k_o = p.number(*d, "k_o", w, dev.k_o, non_negative, ">= 0");
        dev.alpha_v = p.number(*d, "alpha_v", w, dev.alpha_v, positive, "> 0");
        dev.h0_orifice = p.number(*d, "h0_orifice_m", w, dev.h0_orifice, non_negative, ">= 0");
        dev.d_h = p.number(*d, "d_h_m", w, dev.d_h, non_negative, ">= 0");
        dev.k_s = p.number(*d, "k_s", w, dev.k_s, non_negative, ">= 0");
        dev.alpha_s = p.number(*d, "alpha_s", w, dev.alpha_s, positive, "> 0");
        dev.p = p.number(*d, "p_m", w, dev.p, non_negative, ">= 0");
        dev.h_max = p.number(*d, "h_max_m", w, dev.h_max, positive, "> 0");
        try {
            dev.validate();
        } catch (const std::exception& e) {
            p.problem(w, e.what());
        }
    }
    c.initial_depth_m = p.number(*r, "initial_depth_m", "reservoir", 0.0, non_negative, ">= 0");
    if (r->contains("pond_surface_forcing")) {
        if (!(*r)["pond_surface_forcing"].is_boolean())
            p.problem("reservoir.pond_surface_forcing", "expected true or false");
        else
            c.pond_surface_forcing = (*r)["pond_surface_forcing"].get<bool>();
    }
    if (c.initial_depth_m > c.plant.devices.h_max)
        p.problem("reservoir.initial_depth_m", "exceeds h_max_m");
}

void parse_controller(Parser& p, const json& root, ScenarioConfig& c)
{
    auto& m = c.controller;
    m.h_ref = c.plant.devices.p;
    const auto* j = p.object(root, "controller", "config", true);
    if (!j)
        return;
    const std::string w = "controller";
    p.allow_keys(*j, w, {"prediction_horizon_intervals", "control_horizon_intervals", "control_interval_s", "plant_dt_s",
                         "rho_u", "rho_r", "h_ref_m", "q_max_minor_m3s", "q_max_major_m3s", "alpha_p",
                         "detention_time_s", "q_release_m3s", "wet_weather_threshold_m3s", "n_starts",
                         "max_evals_per_start", "du_min", "du_max"});
    m.prediction_horizon = p.count(*j, "prediction_horizon_intervals", w, m.prediction_horizon, 1);
    m.control_horizon = p.count(*j, "control_horizon_intervals", w, m.control_horizon, 1);
    m.control_interval_s = p.number(*j, "control_interval_s", w, m.control_interval_s, positive, "> 0");
    m.plant_dt_s = p.number(*j, "plant_dt_s", w, m.plant_dt_s, positive, "> 0");
    m.rho_u = p.number(*j, "rho_u", w, m.rho_u, non_negative, ">= 0");
    m.rho_r = p.number(*j, "rho_r", w, m.rho_r, non_negative, ">= 0");
    m.h_ref = p.number(*j, "h_ref_m", w, m.h_ref, non_negative, ">= 0");
    m.q_max_minor = p.number(*j, "q_max_minor_m3s", w, std::nullopt, non_negative, ">= 0");
    m.q_max_major = p.number(*j, "q_max_major_m3s", w, std::nullopt, non_negative, ">= 0");
    m.alpha_p = p.number(*j, "alpha_p", w, std::nullopt, [](double x) { return x > 0 && x < 1; }, "0 < alpha_p < 1");
    m.dt_detention_s = p.number(*j, "detention_time_s", w, std::nullopt, non_negative, ">= 0");
    m.q_release = p.number(*j, "q_release_m3s", w, std::nullopt, non_negative, ">= 0");
    m.wet_weather_threshold = p.number(*j, "wet_weather_threshold_m3s", w, std::nullopt, non_negative, ">= 0");
    m.n_starts = p.count(*j, "n_starts", w, m.n_starts, 1);
    m.max_evals_per_start = p.count(*j, "max_evals_per_start", w, m.max_evals_per_start, 1);
    m.du_min = p.number(*j, "du_min", w, m.du_min, [](double x) { return x <= 0; }, "<= 0");
    m.du_max = p.number(*j, "du_max", w, m.du_max, non_negative, ">= 0");
    try {
        m.validate();
    } catch (const std::exception& e) {
        // Only report cross-field rules here; single fields were checked above.
        std::istringstream lines(e.what());
        std::string line;
        std::getline(lines, line);
        while (std::getline(lines, line)) {
            const auto msg = line.substr(line.find_first_not_of(" -"));
            if (msg.find("required") == std::string::npos)
                p.problem(w, msg);
        }
    }
}

void parse_strategies(Parser& p, const json& root, ScenarioConfig& c)
{
    if (!root.contains("strategies") || !root["strategies"].is_array() || root["strategies"].empty()) {
        p.problem("config", "\"strategies\" must be a non-empty array");
        return;
    }
    std::set<std::string> seen;
    for (const auto& s : root["strategies"]) {
        if (!s.is_string()) {
            p.problem("strategies", "entries must be strings");
            continue;
        }
        const auto name = s.get<std::string>();
        if (!seen.insert(name).second)
            p.problem("strategies", "duplicate strategy \"" + name + "\"");
        if (name == "mpc") {
            c.strategies.push_back(Strategy::model_predictive());
        } else if (name.rfind("static_", 0) == 0) {
            try {
                std::size_t used = 0;
                const int pct = std::stoi(name.substr(7), &used);
                if (used != name.size() - 7 || pct < 0 || pct > 100)
                    throw std::invalid_argument(name);
                c.strategies.push_back(Strategy::fixed(pct / 100.0));
            } catch (const std::exception&) {
                p.problem("strategies", "\"" + name + "\" is not static_<0..100>");
            }
        } else {
            p.problem("strategies", "unknown strategy \"" + name + "\" (use mpc or static_<percent>)");
        }
    }
}

ScenarioConfig parse(const fs::path& path, std::vector<std::string>& problems)
{
    ScenarioConfig c;
    c.source = path;
    Parser p(path.parent_path());
    json root;
    {
        std::ifstream in(path);
        if (!in) {
            problems.push_back(path.string() + ": cannot open");
            return c;
        }
        try {
            in >> root;
        } catch (const json::exception& e) {
            problems.push_back(path.string() + ": " + e.what());
            return c;
        }
    }
    if (!root.is_object()) {
        problems.push_back(path.string() + ": top level must be an object");
        return c;
    }
    p.allow_keys(root, "config",
                 {"name", "start", "duration_s", "output_dir", "seed", "terrain", "land_use", "soil", "routing",
                  "rainfall", "evapotranspiration", "reservoir", "controller", "strategies"});
    c.name = p.string(root, "name", "config", false);
    const auto start = p.string(root, "start", "config", true);
    if (!start.empty()) {
        try {
            c.start = static_cast<double>(parse_iso8601(start));
        } catch (const std::exception& e) {
            p.problem("config.start", e.what());
        }
    }
    c.duration_s = p.number(root, "duration_s", "config", std::nullopt, positive, "> 0");
    const auto out = p.string(root, "output_dir", "config", true);
    c.output_dir = out.empty() ? fs::path{} : fs::path(out);
    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned())
            p.problem("config.seed", "expected a non-negative integer");
        else
            c.seed = root["seed"].get<std::uint64_t>();
    }
    parse_terrain(p, root, c);
    parse_surface(p, root, c);
    parse_forcing(p, root, c);
    parse_reservoir(p, root, c);
    parse_controller(p, root, c);
    parse_strategies(p, root, c);
    if (std::isfinite(c.duration_s) && c.controller.plant_dt_s > 0) {
        const double r = c.duration_s / c.controller.plant_dt_s;
        if (std::abs(r - std::round(r)) > 1e-9 * r)
            p.problem("config.duration_s", "must be a multiple of controller.plant_dt_s");
    }
    for (const auto& [offset, spec] : c.storms)
        if (std::isfinite(spec.duration_h) && offset + spec.duration_h * 3600.0 > c.duration_s + 1e-9)
            p.problem("rainfall.design_storms", "a storm extends past duration_s");
    problems.insert(problems.end(), p.problems.begin(), p.problems.end());
    return c;
}

// ---------------------------------------------------------------------------
// Watershed assembly

// Deterministic, well-mixed scatter of sealed cells (golden-ratio sequence).
bool impervious_cell(const ScenarioConfig& c, CellIndex i)
{
    if (c.impervious_fraction <= 0.0)
        return false;
    const double x = static_cast<double>(i + 1) * 0.6180339887498949;
    return x - std::floor(x) < c.impervious_fraction;
}

RasterField manning_raster(const ScenarioConfig& c, const GridGeometry& g)
{
    if (c.land_use_path.empty()) {
        RasterField n(g, c.manning_n);
        for (CellIndex i = 0; i < g.size(); ++i)
            if (impervious_cell(c, i))
                n[i] = c.impervious_manning_n;
        return n;
    }
    const auto lu = read_ascii_grid(c.land_use_path);
    if (!lu.geometry.same_extent(g))
        throw InvalidInput("land-use raster does not match the DEM grid");
    RasterField n(g, g.nodata);
    for (CellIndex i = 0; i < g.size(); ++i) {
        if (lu.is_nodata(i))
            continue;
        const auto it = c.manning_by_class.find(static_cast<int>(std::lround(lu[i])));
        if (it == c.manning_by_class.end())
            throw InvalidInput("land-use class " + std::to_string(std::lround(lu[i])) + " has no Manning n");
        n[i] = it->second;
    }
    return n;
}

SoilField soil_field(const ScenarioConfig& c, const GridGeometry& g)
{
    if (c.soil_class_path.empty()) {
        if (c.impervious_fraction <= 0.0)
            return SoilField::uniform(g, c.soil);
        RasterField classes(g, 0.0);
        for (CellIndex i = 0; i < g.size(); ++i)
            classes[i] = impervious_cell(c, i) ? 1.0 : 0.0;
        SoilParams sealed;
        sealed.h0 = c.impervious_h0_m;
        return SoilField::from_classes(classes, {{0, c.soil}, {1, sealed}});
    }
    const auto classes = read_ascii_grid(c.soil_class_path);
    if (!classes.geometry.same_extent(g))
        throw InvalidInput("soil-class raster does not match the DEM grid");
    return SoilField::from_classes(classes, read_soil_table(c.soil_table_path));
}

std::vector<GaugeSeries> load_gauges(const fs::path& manifest)
{
    std::vector<GaugeSeries> out;
    for (const auto& st : read_station_manifest(manifest)) {
        auto g = read_gauge_csv(st.path);
        g.id = st.id;
        g.x = st.x;
        g.y = st.y;
        out.push_back(std::move(g));
    }
    return out;
}

ForcingModel build_forcing(const ScenarioConfig& c, const GridGeometry& g)
{
    const double et = c.et_constant_mm_day * kMmPerDayToMetersPerSecond;
    std::optional<ForcingModel> model;
    if (!c.storms.empty()) {
        std::vector<std::pair<double, Hyetograph>> storms;
        for (const auto& [offset, spec] : c.storms)
            storms.emplace_back(offset, alternating_blocks(spec));
        model.emplace(g, design_storm_series(c.start, c.duration_s, storms), et);
    } else {
        model.emplace(g, load_gauges(c.gauge_manifest), c.idw_exponent, et);
    }
    if (!c.climate_manifest.empty()) {
        StationEt st;
        for (const auto& s : read_station_manifest(c.climate_manifest)) {
            const auto days = read_climate_csv(s.path);
            st.locations.push_back({s.x, s.y, 0.0});
            st.series.push_back(reference_evapotranspiration(days, {c.elevation_m}));
        }
        model->set_station_et(std::move(st), c.idw_exponent);
    }
    if (model->start() > c.start || model->end() < c.start + c.duration_s)
        throw OutOfRange("rainfall record " + format_iso8601(model->start()) + " .. " + format_iso8601(model->end())
                         + " does not cover the simulation span");
    return std::move(*model);
}

// ---------------------------------------------------------------------------
// Output helpers

std::string num(double x, int decimals = 6)
{
    if (x == 0.0)
        x = 0.0;  // no negative zero in outputs
    return fmt::format("{:.{}f}", x, decimals);
}

void write_text(const fs::path& file, const std::string& text)
{
    std::ofstream out(file, std::ios::binary);
    if (!out)
        throw InvalidInput("cannot write " + file.string());
    out << text;
}

std::string trace_csv(const RunTrace& tr)
{
    std::string s = "timestamp,h_m,u_v,u_s,q_in_m3s,q_out_m3s,overtopping_flag\n";
    for (const auto& r : tr.steps)
        s += fmt::format("{},{},{},{},{},{},{}\n", format_iso8601(r.t), num(r.h), num(r.u_v), num(r.u_s),
                         num(r.q_in), num(r.q_out), r.overtopped ? 1 : 0);
    return s;
}

std::string controller_csv(const RunTrace& tr)
{
    std::string s = "horizon_index,mode,cost,evals,u_v_applied,u_s_applied,q_ref,rho_q,rho_star,detention_clock_s\n";
    for (const auto& h : tr.horizons)
        s += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", h.index, to_string(h.mode), num(h.cost), h.evals,
                         num(h.u_v_applied), num(h.u_s_applied), num(h.reference.q_ref), num(h.reference.rho_q, 1),
                         num(h.reference.rho_star, 1), num(h.detention_clock_s, 1));
    return s;
}

std::string quality_csv(const RunTrace& tr, double dt)
{
    std::string s = "timestamp,dt_s,eligible,detention_s,q_orifice_m3s\n";
    for (const auto& r : tr.steps)
        s += fmt::format("{},{},{},{},{}\n", format_iso8601(r.t), num(dt, 1), r.eligible ? 1 : 0,
                         num(r.detention_s, 1), num(r.q_orifice));
    return s;
}

std::string duration_csv(const char* column, std::span<const double> values)
{
    std::string s = fmt::format("exceedance_probability,{}\n", column);
    for (const auto& [prob, v] : duration_curve(values))
        s += fmt::format("{},{}\n", num(prob, 8), num(v));
    return s;
}

struct TraceColumns {
    std::vector<double> q_in, q_out, h, q_orifice, detention;
    std::vector<bool> eligible;
    std::size_t overtopping = 0;
};

IndicatorReport compute_indicators(const std::string& name, const TraceColumns& t, double q_minor, double q_major,
                                   double dt)
{
    IndicatorReport r;
    r.strategy = name;
    for (std::size_t i = 0; i < t.q_in.size(); ++i) {
        r.peak_inflow = std::max(r.peak_inflow, t.q_in[i]);
        r.peak_outflow = std::max(r.peak_outflow, t.q_out[i]);
        r.max_depth = std::max(r.max_depth, t.h[i]);
        r.outflow_volume += t.q_out[i] * dt;
    }
    r.reduction_pct = peak_reduction_pct(r.peak_inflow, r.peak_outflow);
    r.treated_volume = treated_volume(t.q_orifice, t.eligible, dt);
    r.avg_detention_s = average_detention_time(t.q_orifice, t.detention, t.eligible, dt);
    r.overtopping_steps = t.overtopping;
    r.time_above_minor_s = time_above(t.q_out, q_minor, dt);
    r.time_above_major_s = time_above(t.q_out, q_major, dt);
    return r;
}

std::string report_csv(const std::vector<IndicatorReport>& rows)
{
    std::string s = "strategy,peak_inflow_m3s,peak_outflow_m3s,peak_reduction_pct,treated_volume_m3,"
                    "avg_detention_time_s,max_depth_m,overtopping_steps,time_above_minor_s,time_above_major_s,"
                    "outflow_volume_m3\n";
    for (const auto& r : rows)
        s += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.strategy, num(r.peak_inflow), num(r.peak_outflow),
                         num(r.reduction_pct, 3), num(r.treated_volume, 3),
                         r.avg_detention_s ? num(*r.avg_detention_s, 1) : std::string(), num(r.max_depth),
                         r.overtopping_steps, num(r.time_above_minor_s, 1), num(r.time_above_major_s, 1),
                         num(r.outflow_volume, 3));
    return s;
}

} // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> validate_scenario(const fs::path& path)
{
    std::vector<std::string> problems;
    parse(path, problems);
    return problems;
}

ScenarioConfig load_scenario(const fs::path& path)
{
    std::vector<std::string> problems;
    auto c = parse(path, problems);
    if (!problems.empty()) {
        std::string msg = path.string() + ": invalid scenario";
        for (const auto& p : problems)
            msg += "\n  - " + p;
        throw InvalidInput(msg);
    }
    return c;
}

fs::path resolve_output_dir(const ScenarioConfig& cfg)
{
    if (const char* root = std::getenv("STORMRTC_OUTPUT_ROOT"); root && *root) {
        // keep the result inside the root: drop the anchor and any leading ".." parts
        fs::path rel;
        for (const auto& part : cfg.output_dir.lexically_normal().relative_path())
            if (!(rel.empty() && (part == ".." || part == ".")))
                rel /= part;
        return fs::path(root) / rel;
    }
    if (cfg.output_dir.is_absolute())
        return cfg.output_dir;
    return cfg.source.parent_path() / cfg.output_dir;
}

WatershedRun run_watershed(const ScenarioConfig& c)
{
    const RasterField dem = c.valley ? valley_dem(*c.valley) : read_ascii_grid(c.dem_path);
    const CellIndex outlet = c.valley ? valley_outlet(*c.valley) : c.outlet.value_or(lowest_boundary_cell(dem));
    const auto conditioned = condition_dem(dem, c.min_slope, outlet);
    FlowTopologyOptions topt;
    topt.outlet_slope = c.outlet_slope;
    auto topo = build_flow_topology(conditioned, outlet, topt);
    const auto& g = topo.geometry;

    RoutingParams rp{manning_raster(c, g), c.cfl, c.dt_min_s, c.dt_max_s};
    const auto forcing = build_forcing(c, g);
    WatershedModel model(std::move(topo), soil_field(c, g), std::move(rp), WatershedState::dry(g, c.start));

    const double pdt = c.controller.plant_dt_s;
    const auto nbins = static_cast<std::size_t>(std::llround(c.duration_s / pdt));
    WatershedRun run;
    run.series.start = c.start;
    run.series.dt = pdt;
    run.series.q_in.assign(nbins, 0.0);
    if (c.pond_surface_forcing) {
        run.series.i_p.assign(nbins, 0.0);
        run.series.e_p.assign(nbins, 0.0);
    }
    run.min_dt = std::numeric_limits<double>::infinity();

    auto& L = run.ledger;
    L.storage_initial = model.storage_volume();
    const double end = c.start + static_cast<double>(nbins) * pdt;
    double t = c.start;
    std::optional<ForcingSnapshot> snap;
    double snap_until = -std::numeric_limits<double>::infinity();
    double cum_residual = 0.0;
    std::size_t bin = 0;
    while (bin < nbins) {
        const double bin_end = c.start + static_cast<double>(bin + 1) * pdt;
        if (t >= snap_until) {
            snap = forcing.snapshot_at(t);
            snap_until = forcing.next_change(t);
        }
        const double stop = std::min({bin_end, snap_until, end});
        const auto r = model.step(*snap, stop - t);
        const bool reached = r.dt >= stop - t;
        t = reached ? stop : t + r.dt;
        ++run.steps;
        run.min_dt = std::min(run.min_dt, r.dt);

        const double w = r.dt / pdt;
        run.series.q_in[bin] += r.outlet.q_out_w * w;
        if (c.pond_surface_forcing) {
            run.series.i_p[bin] += snap->i_p[outlet] * w;
            run.series.e_p[bin] += snap->e_tr[outlet] * w;
        }

        const auto& s = r.ledger;
        L.rain += s.rain;
        L.outflow += s.outflow;
        L.et += s.et;
        L.infiltration += s.infiltration;
        L.recharge += s.recharge;
        const double res = s.residual();
        const double tol = 1e-6 * s.rain + 1e-12 * (s.storage_before + s.storage_after) + 1e-9;
        if (std::abs(res) > tol)
            throw InvariantViolation(fmt::format(
                "watershed mass ledger failed at {} (step {}, dt {} s): rain {} m3, outflow {} m3, et {} m3, "
                "recharge {} m3, storage {} -> {} m3, residual {} m3",
                format_iso8601(t), run.steps, r.dt, s.rain, s.outflow, s.et, s.recharge, s.storage_before,
                s.storage_after, res));
        cum_residual += res;
        const double scale = std::max({L.rain, L.storage_initial, 1.0});
        L.worst_relative_residual = std::max(L.worst_relative_residual, std::abs(cum_residual) / scale);
        if (t >= bin_end)
            ++bin;
    }
    L.storage_final = model.storage_volume();
    L.surface_final = model.surface_volume();
    return run;
}

IndicatorReport indicators_from_trace(const RunTrace& trace, const MpcConfig& cfg, double dt)
{
    TraceColumns t;
    for (const auto& s : trace.steps) {
        t.q_in.push_back(s.q_in);
        t.q_out.push_back(s.q_out);
        t.h.push_back(s.h);
        t.q_orifice.push_back(s.q_orifice);
        t.detention.push_back(s.detention_s);
        t.eligible.push_back(s.eligible);
        t.overtopping += s.overtopped ? 1 : 0;
    }
    return compute_indicators(trace.strategy, t, cfg.q_max_minor, cfg.q_max_major, dt);
}

void write_hydrograph(const fs::path& file, const PlantSeries& series)
{
    std::string s = "timestamp,discharge_m3s\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        s += fmt::format("{},{}\n", format_iso8601(series.start + static_cast<double>(i) * series.dt),
                         num(series.q_in[i]));
    write_text(file, s);
}

ScenarioResult run_scenario(const ScenarioConfig& c, const std::optional<std::string>& only)
{
    ScenarioResult result;
    result.output_dir = resolve_output_dir(c);
    fs::create_directories(result.output_dir);
    result.watershed = run_watershed(c);
    const auto& ws = result.watershed;
    write_hydrograph(result.output_dir / "hydrograph.csv", ws.series);

    std::vector<std::string> names;
    for (const auto& strategy : c.strategies) {
        if (only && strategy.name != *only)
            continue;
        names.push_back(strategy.name);
        ReservoirState init;
        init.h = c.initial_depth_m;
        auto trace = run_receding_horizon(ws.series, c.controller, c.plant, strategy, init);
        const auto dir = result.output_dir / strategy.name;
        fs::create_directories(dir);
        std::vector<double> q, h;
        for (const auto& s : trace.steps) {
            q.push_back(s.q_out);
            h.push_back(s.h);
        }
        write_text(dir / "reservoir_trace.csv", trace_csv(trace));
        write_text(dir / "controller_trace.csv", controller_csv(trace));
        write_text(dir / "quality_trace.csv", quality_csv(trace, c.controller.plant_dt_s));
        if (!q.empty()) {
            write_text(dir / "flow_duration.csv", duration_csv("q_out_m3s", q));
            write_text(dir / "stage_duration.csv", duration_csv("h_m", h));
        }
        result.traces.push_back(std::move(trace));
    }
    if (only && names.empty())
        throw InvalidInput("strategy \"" + *only + "\" is not listed in the scenario");

    // End-to-end ledger: watershed terms plus each strategy's pond terms.
    const auto& L = ws.ledger;
    std::string ledger = "strategy,rain_m3,pond_rain_m3,watershed_outflow_m3,watershed_et_m3,pond_evap_m3,recharge_m3,"
                         "watershed_storage_change_m3,pond_storage_change_m3,reservoir_outflow_m3,residual_m3,"
                         "relative_residual\n";
    for (const auto& tr : result.traces) {
        const double rain = L.rain + tr.rain_volume;
        const double residual = rain - (tr.outflow_volume + L.et + tr.evap_volume + L.recharge
                                        + (L.storage_final - L.storage_initial) + tr.storage_change);
        ledger += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{:.3e}\n", tr.strategy, num(L.rain, 3),
                              num(tr.rain_volume, 3), num(L.outflow, 3), num(L.et, 3), num(tr.evap_volume, 3),
                              num(L.recharge, 3), num(L.storage_final - L.storage_initial, 3),
                              num(tr.storage_change, 3), num(tr.outflow_volume, 3), num(residual, 6),
                              rain > 0 ? residual / rain : 0.0);
    }
    write_text(result.output_dir / "ledger.csv", ledger);

    json run = {{"name", c.name},
                {"plant_dt_s", c.controller.plant_dt_s},
                {"q_max_minor_m3s", c.controller.q_max_minor},
                {"q_max_major_m3s", c.controller.q_max_major},
                {"strategies", names}};
    write_text(result.output_dir / "run.json", run.dump(2) + "\n");
    write_text(result.output_dir / "report.csv", report_from_directory(result.output_dir));
    return result;
}

std::string report_from_directory(const fs::path& dir)
{
    std::ifstream in(dir / "run.json");
    if (!in)
        throw InvalidInput("no run.json in " + dir.string());
    json run;
    try {
        in >> run;
    } catch (const json::exception& e) {
        throw InvalidInput((dir / "run.json").string() + ": " + e.what());
    }
    const double dt = run.at("plant_dt_s").get<double>();
    const double q_minor = run.at("q_max_minor_m3s").get<double>();
    const double q_major = run.at("q_max_major_m3s").get<double>();

    std::vector<IndicatorReport> rows;
    for (const auto& name : run.at("strategies")) {
        const auto sdir = dir / name.get<std::string>();
        const auto res = CsvTable::read(sdir / "reservoir_trace.csv");
        const auto qual = CsvTable::read(sdir / "quality_trace.csv");
        if (res.rows() != qual.rows())
            throw InvalidInput(sdir.string() + ": reservoir and quality traces differ in length");
        auto need = [](const CsvTable& t, std::size_t r, std::size_t col) {
            const auto v = t.number(r, col);
            if (!v)
                throw InvalidInput("missing value in trace row " + std::to_string(r + 1));
            return *v;
        };
        const auto ch = res.require_column("h_m"), cin = res.require_column("q_in_m3s"),
                   cout = res.require_column("q_out_m3s"), cflag = res.require_column("overtopping_flag");
        const auto cel = qual.require_column("eligible"), cdet = qual.require_column("detention_s"),
                   cor = qual.require_column("q_orifice_m3s");
        TraceColumns t;
        for (std::size_t r = 0; r < res.rows(); ++r) {
            t.h.push_back(need(res, r, ch));
            t.q_in.push_back(need(res, r, cin));
            t.q_out.push_back(need(res, r, cout));
            t.overtopping += need(res, r, cflag) != 0.0 ? 1 : 0;
            t.eligible.push_back(need(qual, r, cel) != 0.0);
            t.detention.push_back(need(qual, r, cdet));
            t.q_orifice.push_back(need(qual, r, cor));
        }
        rows.push_back(compute_indicators(name.get<std::string>(), t, q_minor, q_major, dt));
    }
    return report_csv(rows);
}

} // namespace stormrtc
