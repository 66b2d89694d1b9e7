#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctid {

/// Doubles are formatted with 17 significant digits so CSV round-trips are
/// exact at double precision.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
    bool has_column(const std::string& name) const { return column(name) >= 0; }

    std::vector<double> values(const std::string& name) const {
        const int c = column(name);
        if (c < 0) throw std::invalid_argument("missing CSV column \"" + name + "\"");
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(c)]);
        return out;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t b = 0;
        while (b < cell.size() && cell[b] == ' ') ++b;
        out.push_back(cell.substr(b));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

/// Reads a numeric CSV with a header row. Schema violations report the
/// offending 1-based line number.
inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open \"" + path + "\"");
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto cells = detail::split_csv_line(line);
        if (table.header.empty()) {
            table.header = cells;
            continue;
        }
        if (cells.size() != table.header.size())
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(table.header.size()) + " cells, got " +
                                        std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            try {
                std::size_t used = 0;
                row[i] = std::stod(cells[i], &used);
                if (used != cells[i].size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw std::invalid_argument("line " + std::to_string(lineno) + ": cell \"" +
                                            cells[i] + "\" is not a number");
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw std::invalid_argument("empty CSV: " + path);
    return table;
}

}  // namespace ctid
