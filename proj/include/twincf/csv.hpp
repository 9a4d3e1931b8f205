#pragma once

#include <string>
#include <vector>

namespace twincf {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const;  // throws ParseError when absent
    std::vector<int> int_column(const std::string& name) const;
    std::vector<double> double_column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

}  // namespace twincf
