#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stormrtc {

/// Minimal comma-separated table: a header row plus string cells. No quoting.
class CsvTable {
public:
    static CsvTable read(const std::filesystem::path& path);
    static CsvTable parse(std::string_view text, const std::string& origin = "<memory>");

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }
    std::optional<std::size_t> column(std::string_view name) const;
    std::size_t require_column(std::string_view name) const;
    const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }

    /// Numeric cell; empty, "nan" and "na" read as absent.
    std::optional<double> number(std::size_t row, std::size_t col) const;

private:
    std::string origin_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace stormrtc
