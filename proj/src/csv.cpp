#include "flatvp/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flatvp::csv {

namespace {

std::vector<std::string> splitLine(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r");
    const auto last = s.find_last_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    return s.substr(first, last - first + 1);
}

double parseNumber(const std::string& text, const std::filesystem::path& path, std::size_t lineNo)
{
    const std::string t = trim(text);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw std::runtime_error(path.string() + ":" + std::to_string(lineNo) + ": not a number: '" + t + "'");
    return value;
}

}  // namespace

std::size_t Table::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw std::runtime_error("csv: missing column '" + name + "'");
}

std::vector<double> Table::columnValues(const std::string& name) const
{
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows)
        out.push_back(row.at(c));
    return out;
}

Table read(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("csv: cannot open " + path.string());
    Table table;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        line = trim(line);
        if (line.empty() || line[0] == '#')
            continue;
        auto cells = splitLine(line);
        if (table.header.empty()) {
            for (auto& c : cells)
                table.header.push_back(trim(c));
            continue;
        }
        if (cells.size() != table.header.size())
            throw std::runtime_error(path.string() + ":" + std::to_string(lineNo) + ": wrong number of fields");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells)
            row.push_back(parseNumber(c, path, lineNo));
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty())
        throw std::runtime_error("csv: empty file " + path.string());
    return table;
}

std::string formatNumber(double value)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    if (ec != std::errc())
        throw std::runtime_error("csv: number formatting failed");
    return std::string(buf, ptr);
}

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows, const std::string& comment)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("csv: cannot write " + path.string());
    if (!comment.empty())
        out << "# " << comment << '\n';
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << formatNumber(row[i]);
        out << '\n';
    }
}

}  // namespace flatvp::csv
