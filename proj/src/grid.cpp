#include "stormrtc/grid.hpp"

#include "stormrtc/error.hpp"

#include <algorithm>
#include <string>

namespace stormrtc {

void GridGeometry::validate() const
{
    if (ncols < 1 || nrows < 1)
        throw InvalidInput("grid must have at least one row and one column");
    if (!(cellsize > 0.0))
        throw InvalidInput("grid cellsize must be positive, got " + std::to_string(cellsize));
}

bool GridGeometry::same_extent(const GridGeometry& o) const
{
    return ncols == o.ncols && nrows == o.nrows && cellsize == o.cellsize && xll == o.xll
        && yll == o.yll;
}

RasterField::RasterField(GridGeometry g, double fill) : geometry(g), values(g.size(), fill) {}

RasterField::RasterField(GridGeometry g, std::vector<double> v) : geometry(g), values(std::move(v))
{
    if (values.size() != geometry.size())
        throw InvalidInput("raster value count " + std::to_string(values.size())
                           + " does not match ncols*nrows " + std::to_string(geometry.size()));
}

std::size_t RasterField::valid_count() const
{
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [&](double v) { return v != geometry.nodata; }));
}

std::int64_t neighbor(const GridGeometry& g, CellIndex cell, int dir)
{
    const auto& off = kD8[static_cast<std::size_t>(dir)];
    const auto r = static_cast<std::int64_t>(g.row_of(cell)) + off.drow;
    const auto c = static_cast<std::int64_t>(g.col_of(cell)) + off.dcol;
    if (r < 0 || c < 0 || r >= static_cast<std::int64_t>(g.nrows)
        || c >= static_cast<std::int64_t>(g.ncols))
        return -1;
    return r * static_cast<std::int64_t>(g.ncols) + c;
}

} // namespace stormrtc
