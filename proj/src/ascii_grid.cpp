#include "stormrtc/ascii_grid.hpp"

#include "stormrtc/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

namespace stormrtc {

namespace {

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double to_number(const std::string& token, const char* what)
{
    try {
        std::size_t used = 0;
        double v = std::stod(token, &used);
        if (used != token.size())
            throw InvalidInput("");
        return v;
    } catch (const std::exception&) {
        throw InvalidInput(std::string("ascii grid: bad numeric value for ") + what + ": '" + token
                           + "'");
    }
}

std::string shortest(double v)
{
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

} // namespace

RasterField read_ascii_grid(std::istream& in)
{
    std::optional<double> ncols, nrows, xll, yll, cellsize;
    bool x_center = false, y_center = false;
    double nodata = -9999.0;

    std::string token;
    while (true) {
        auto pos = in.tellg();
        if (!(in >> token))
            throw InvalidInput("ascii grid: unexpected end of header");
        const std::string key = lower(token);
        const bool is_key = !key.empty() && std::isalpha(static_cast<unsigned char>(key[0]));
        if (!is_key) {
            in.seekg(pos);
            break;
        }
        std::string value;
        if (!(in >> value))
            throw InvalidInput("ascii grid: header keyword '" + token + "' has no value");
        if (key == "ncols")
            ncols = to_number(value, "ncols");
        else if (key == "nrows")
            nrows = to_number(value, "nrows");
        else if (key == "xllcorner")
            xll = to_number(value, "xllcorner");
        else if (key == "xllcenter")
            xll = to_number(value, "xllcenter"), x_center = true;
        else if (key == "yllcorner")
            yll = to_number(value, "yllcorner");
        else if (key == "yllcenter")
            yll = to_number(value, "yllcenter"), y_center = true;
        else if (key == "cellsize")
            cellsize = to_number(value, "cellsize");
        else if (key == "nodata_value")
            nodata = to_number(value, "NODATA_value");
        else
            throw InvalidInput("ascii grid: unknown header keyword '" + token + "'");
    }
    if (!ncols || !nrows || !xll || !yll || !cellsize)
        throw InvalidInput("ascii grid: header must define ncols, nrows, xllcorner, yllcorner, cellsize");
    if (*ncols < 1 || *nrows < 1 || *ncols != static_cast<double>(static_cast<std::size_t>(*ncols))
        || *nrows != static_cast<double>(static_cast<std::size_t>(*nrows)))
        throw InvalidInput("ascii grid: ncols and nrows must be positive integers");

    GridGeometry g;
    g.ncols = static_cast<std::size_t>(*ncols);
    g.nrows = static_cast<std::size_t>(*nrows);
    g.cellsize = *cellsize;
    g.xll = *xll - (x_center ? 0.5 * g.cellsize : 0.0);
    g.yll = *yll - (y_center ? 0.5 * g.cellsize : 0.0);
    g.nodata = nodata;
    g.validate();

    std::vector<double> values;
    values.reserve(g.size());
    while (values.size() < g.size() && (in >> token))
        values.push_back(to_number(token, "cell"));
    if (values.size() != g.size())
        throw InvalidInput("ascii grid: expected " + std::to_string(g.size()) + " values, found "
                           + std::to_string(values.size()));
    if (in >> token)
        throw InvalidInput("ascii grid: trailing data after " + std::to_string(g.size()) + " values");
    return RasterField(g, std::move(values));
}

RasterField read_ascii_grid(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot open ascii grid " + path.string());
    return read_ascii_grid(in);
}

void write_ascii_grid(std::ostream& out, const RasterField& field)
{
    const auto& g = field.geometry;
    out << "ncols " << g.ncols << '\n'
        << "nrows " << g.nrows << '\n'
        << "xllcorner " << shortest(g.xll) << '\n'
        << "yllcorner " << shortest(g.yll) << '\n'
        << "cellsize " << shortest(g.cellsize) << '\n'
        << "NODATA_value " << shortest(g.nodata) << '\n';
    for (std::size_t r = 0; r < g.nrows; ++r) {
        for (std::size_t c = 0; c < g.ncols; ++c) {
            if (c)
                out << ' ';
            out << shortest(field.at(r, c));
        }
        out << '\n';
    }
}

void write_ascii_grid(const std::filesystem::path& path, const RasterField& field)
{
    std::ofstream out(path);
    if (!out)
        throw InvalidInput("cannot write ascii grid " + path.string());
    write_ascii_grid(out, field);
}

} // namespace stormrtc
