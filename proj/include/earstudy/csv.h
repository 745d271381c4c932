#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace earstudy::csv {

// Minimal reader for the numeric CSV files this project exchanges: no quoting,
// '#' lines are comments, the first non-comment line is the header.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

std::vector<std::string> split(std::string_view line, char sep = ',');
Table parse(std::string_view text, std::string_view source_name);
Table read(const std::filesystem::path& path);

/// Parses a finite double; throws StructuralError mentioning `where` otherwise.
double to_double(std::string_view field, std::string_view where);

/// Shortest round-trip representation.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);

/// Writes atomically enough for our purposes: temp file then rename.
void write_text_file(const std::filesystem::path& path, std::string_view content);

} // namespace earstudy::csv
