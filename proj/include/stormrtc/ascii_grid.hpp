#pragma once

#include "stormrtc/grid.hpp"

#include <filesystem>
#include <iosfwd>

namespace stormrtc {

/// ESRI ASCII grid reader. Keywords are case-insensitive and may be separated
/// by any whitespace; `xllcenter`/`yllcenter` are converted to corners.
RasterField read_ascii_grid(std::istream& in);
RasterField read_ascii_grid(const std::filesystem::path& path);

/// Writes the header in the canonical order (ncols, nrows, xllcorner,
/// yllcorner, cellsize, NODATA_value) followed by north-first rows. Values
/// use the shortest representation that round-trips.
void write_ascii_grid(std::ostream& out, const RasterField& field);
void write_ascii_grid(const std::filesystem::path& path, const RasterField& field);

} // namespace stormrtc
