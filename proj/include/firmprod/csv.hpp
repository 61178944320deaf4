#pragma once

#include <optional>
#include <string>
#include <vector>

namespace firmprod::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index or -1.
    int col(const std::string& name) const;
};

Table read_file(const std::string& path);
Table parse(const std::string& text);
void write_file(const std::string& path, const Table& table);
std::string to_string(const Table& table);

// Shortest representation that round-trips; "" encodes a missing value.
std::string format_double(double x);
// Empty or unparseable cells map to nullopt, never to zero.
std::optional<double> parse_double(const std::string& cell);

}  // namespace firmprod::csv
