#include "stormrtc/csv.hpp"

#include "stormrtc/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace stormrtc {

namespace {

std::string trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> split(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

} // namespace

CsvTable CsvTable::read(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot open csv " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

CsvTable CsvTable::parse(std::string_view text, const std::string& origin)
{
    CsvTable t;
    t.origin_ = origin;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        auto line = text.substr(start, end == std::string_view::npos ? end : end - start);
        start = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (trim(line).empty() || trim(line).front() == '#')
            continue;
        auto cells = split(line);
        if (t.header_.empty()) {
            t.header_ = std::move(cells);
            continue;
        }
        if (cells.size() != t.header_.size())
            throw InvalidInput(origin + ":" + std::to_string(line_no) + ": expected "
                               + std::to_string(t.header_.size()) + " fields, got "
                               + std::to_string(cells.size()));
        t.rows_.push_back(std::move(cells));
    }
    if (t.header_.empty())
        throw InvalidInput(origin + ": empty csv");
    return t;
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const
{
    auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - header_.begin());
}

std::size_t CsvTable::require_column(std::string_view name) const
{
    if (auto c = column(name))
        return *c;
    throw InvalidInput(origin_ + ": missing column '" + std::string(name) + "'");
}

std::optional<double> CsvTable::number(std::size_t row, std::size_t col) const
{
    const auto& s = rows_[row][col];
    std::string low = s;
    std::transform(low.begin(), low.end(), low.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (low.empty() || low == "nan" || low == "na")
        return std::nullopt;
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used == s.size())
            return v;
    } catch (const std::exception&) {
    }
    throw InvalidInput(origin_ + ": row " + std::to_string(row + 1) + ": '" + s + "' is not a number");
}

} // namespace stormrtc
