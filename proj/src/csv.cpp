#include "twincf/csv.hpp"

#include <fstream>
#include <sstream>

#include "twincf/error.hpp"

namespace twincf {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

}  // namespace

int CsvTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    throw ParseError("CSV has no column '" + name + "'");
}

std::vector<int> CsvTable::int_column(const std::string& name) const {
    const int c = column_index(name);
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(std::stoi(row[c]));
    return out;
}

std::vector<double> CsvTable::double_column(const std::string& name) const {
    const int c = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(std::stod(row[c]));
    return out;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split_line(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != t.header.size())
            throw ParseError("'" + path + "': row has " + std::to_string(cells.size()) +
                             " cells, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    for (std::size_t i = 0; i < table.header.size(); ++i)
        out << (i ? "," : "") << table.header[i];
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

}  // namespace twincf
