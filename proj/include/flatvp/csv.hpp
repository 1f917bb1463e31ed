#pragma once

// Minimal numeric CSV reader/writer: `.` decimals, `,` separator, one header row,
// LF line endings. Lines starting with '#' are comments.

#include <filesystem>
#include <string>
#include <vector>

namespace flatvp::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a named column; throws std::runtime_error when missing.
    std::size_t column(const std::string& name) const;
    std::vector<double> columnValues(const std::string& name) const;
};

Table read(const std::filesystem::path& path);

/// Writes header and rows with round-trip precision (17 significant digits).
/// An optional comment line (without the leading '#') is emitted first.
void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows, const std::string& comment = {});

std::string formatNumber(double value);

}  // namespace flatvp::csv
