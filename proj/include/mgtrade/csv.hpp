#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <ostream>
#include <vector>

#include "mgtrade/error.hpp"

namespace mgtrade::csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

/// Reads one numeric column (selected by header name) from a CSV file.
/// Blank lines are skipped.
inline std::vector<double> read_column(const std::string& path, const std::string& column) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, "cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path, "missing header row");
    const std::vector<std::string> header = split_line(line);
    std::size_t col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == column) col = i;
    if (col == header.size()) throw ParseError(path, "missing column '" + column + "'");

    std::vector<double> values;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        const std::string where = path + ":" + std::to_string(row);
        if (col >= cells.size()) throw ParseError(where, "row has no '" + column + "' cell");
        const std::string& cell = cells[col];
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty())
            throw ParseError(where, "non-numeric cell '" + cell + "'");
        values.push_back(v);
    }
    return values;
}

/// Minimal CSV writer; numbers use the shortest round-trip representation.
class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    Writer& header(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
        out_ << '\n';
        return *this;
    }

    template <typename... Cells>
    Writer& row(const Cells&... cells) {
        bool first = true;
        ((out_ << (first ? "" : ",") << format(cells), first = false), ...);
        out_ << '\n';
        return *this;
    }

    static std::string format(double v) {
        char buf[32];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
    }
    static std::string format(const std::string& s) { return s; }
    static std::string format(const char* s) { return s; }
    template <typename I>
        requires std::is_integral_v<I>
    static std::string format(I v) { return std::to_string(v); }

private:
    std::ostream& out_;
};

} // namespace mgtrade::csv
