#include "citescope/tsv.hpp"

#include <fstream>
#include <sstream>

#include "citescope/error.hpp"
#include "citescope/text.hpp"

namespace citescope {

std::optional<std::size_t> TsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t TsvTable::require_column(std::string_view name) const {
    auto c = column(name);
    if (!c) throw ParseError(source, 1, "missing column '" + std::string(name) + "'");
    return *c;
}

TsvTable parse_tsv(std::string_view document, const std::string& source) {
    TsvTable table;
    table.source = source;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool have_header = false;
    while (start < document.size()) {
        auto end = document.find('\n', start);
        if (end == std::string_view::npos) end = document.size();
        std::string_view line = document.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        auto cols = text::split(line, '\t');
        if (!have_header) {
            table.header = std::move(cols);
            have_header = true;
            continue;
        }
        if (cols.size() != table.header.size()) {
            throw ParseError(source, line_no,
                             "expected " + std::to_string(table.header.size()) + " columns, got " +
                                 std::to_string(cols.size()));
        }
        table.rows.push_back(std::move(cols));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) throw ParseError(source, line_no, "missing header row");
    return table;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TsvTable read_tsv(const std::filesystem::path& path) { return parse_tsv(read_file(path), path.string()); }

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace citescope
