#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citescope::text {

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

// Simple one-to-one lower-casing for Latin, Greek and Cyrillic.
char32_t to_lower(char32_t c);

// Maps accented Latin letters onto their base letter (é -> e, ß -> s).
// Anything else is returned unchanged.
char32_t strip_diacritic(char32_t c);

bool is_letter(char32_t c);

// Trims and collapses every run of whitespace to a single space.
std::string normalize_whitespace(std::string_view s);

// Case-folded, diacritic-stripped, punctuation-insensitive form of a
// title, used as the deduplication and matching key.
std::string fold_title(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::optional<int> parse_int(std::string_view s);

// Formats with a fixed number of decimals ("%.*f"), normalizing "-0.000"
// to "0.000".
std::string fixed(double v, int decimals = 10);

std::string xml_escape(std::string_view s);

// Replaces tabs and newlines so a value fits in one TSV cell.
std::string tsv_clean(std::string_view s);

}  // namespace citescope::text
