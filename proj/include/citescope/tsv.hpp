#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citescope {

// Tab-separated table with a header row. Lines starting with '#' and blank
// lines are skipped.
struct TsvTable {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    std::optional<std::size_t> column(std::string_view name) const;
    // Throws ParseError naming the source when the column is missing.
    std::size_t require_column(std::string_view name) const;
};

TsvTable parse_tsv(std::string_view document, const std::string& source);
TsvTable read_tsv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary file and rename so readers never see partial output.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace citescope
