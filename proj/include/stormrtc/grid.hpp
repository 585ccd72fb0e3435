#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stormrtc {

using CellIndex = std::size_t;

/// Georeferencing and shape of a square-celled raster. Row 0 is the north row.
struct GridGeometry {
    std::size_t ncols = 0;
    std::size_t nrows = 0;
    double cellsize = 1.0;
    double xll = 0.0;
    double yll = 0.0;
    double nodata = -9999.0;

    std::size_t size() const { return ncols * nrows; }
    CellIndex index(std::size_t row, std::size_t col) const { return row * ncols + col; }
    std::size_t row_of(CellIndex i) const { return i / ncols; }
    std::size_t col_of(CellIndex i) const { return i % ncols; }
    double cell_area() const { return cellsize * cellsize; }

    /// Map coordinates of the cell centre.
    double x_center(std::size_t col) const { return xll + (static_cast<double>(col) + 0.5) * cellsize; }
    double y_center(std::size_t row) const
    {
        return yll + (static_cast<double>(nrows - row) - 0.5) * cellsize;
    }

    /// Throws InvalidInput unless ncols, nrows >= 1 and cellsize > 0.
    void validate() const;

    /// Same shape, cellsize and origin (nodata sentinel may differ).
    bool same_extent(const GridGeometry& other) const;
};

/// A 2-D grid of per-cell values; cells equal to geometry.nodata are masked.
struct RasterField {
    GridGeometry geometry;
    std::vector<double> values;

    RasterField() = default;
    RasterField(GridGeometry g, double fill);
    RasterField(GridGeometry g, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    bool is_nodata(CellIndex i) const { return values[i] == geometry.nodata; }
    double& operator[](CellIndex i) { return values[i]; }
    double operator[](CellIndex i) const { return values[i]; }
    double& at(std::size_t row, std::size_t col) { return values[geometry.index(row, col)]; }
    double at(std::size_t row, std::size_t col) const { return values[geometry.index(row, col)]; }

    std::size_t valid_count() const;
};

/// D8 neighbourhood, clockwise from north.
struct D8Offset {
    int drow;
    int dcol;
    bool diagonal;
};

inline constexpr std::array<D8Offset, 8> kD8 = {{
    {-1, 0, false},
    {-1, 1, true},
    {0, 1, false},
    {1, 1, true},
    {1, 0, false},
    {1, -1, true},
    {0, -1, false},
    {-1, -1, true},
}};

inline constexpr double kSqrt2 = 1.41421356237309504880;

/// Neighbour of `cell` in direction `dir`, or -1 when it falls off the grid.
std::int64_t neighbor(const GridGeometry& g, CellIndex cell, int dir);

/// Centre-to-centre distance to the neighbour in direction `dir`.
inline double link_length(const GridGeometry& g, int dir)
{
    return kD8[static_cast<std::size_t>(dir)].diagonal ? g.cellsize * kSqrt2 : g.cellsize;
}

} // namespace stormrtc
