#pragma once

#include "stormrtc/forcing.hpp"
#include "stormrtc/grid.hpp"
#include "stormrtc/mpc.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

void write_file(const std::filesystem::path& file, const std::string& text);
std::string read_file(const std::filesystem::path& file);

/// Writes gauge CSVs plus a station manifest; returns the manifest path.
std::filesystem::path write_gauge_set(const std::filesystem::path& dir,
                                      const std::vector<stormrtc::GaugeSeries>& gauges);

/// Writes one climate CSV per station plus a manifest; returns the manifest path.
std::filesystem::path write_climate_set(const std::filesystem::path& dir,
                                        const std::vector<stormrtc::Station>& stations,
                                        const std::vector<std::vector<stormrtc::ClimateDay>>& days);

/// Plane descending toward the east edge with the given slope.
stormrtc::RasterField tilted_plane(std::size_t ncols, std::size_t nrows, double cellsize, double slope);

/// Controller settings of the reference pond study (1 h intervals, 12 h horizon).
stormrtc::MpcConfig reference_controller();

/// Lowest objective over every feasible schedule whose entries lie on an
/// evenly spaced lattice of `levels` values in [0, 1].
double lattice_min_cost(const stormrtc::ReservoirState& state, const stormrtc::HorizonForecast& forecast,
                        const stormrtc::MpcConfig& cfg, const stormrtc::Plant& plant, int levels);

/// Path of the repository's scenario directory.
std::filesystem::path scenario_dir();

} // namespace fixtures
