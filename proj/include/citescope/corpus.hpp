#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace citescope {

// One seed bibliography entry. A reference cited by several chapters is a
// single record carrying all of their tags.
struct ReferenceRecord {
    std::string raw_key;
    std::string title;
    std::vector<std::string> authors;
    std::optional<int> year;
    std::set<std::string> chapter_tags;
    std::optional<std::string> doi;

    bool operator==(const ReferenceRecord&) const = default;
};

struct Corpus {
    std::vector<ReferenceRecord> records;
    std::vector<std::string> exclusions_applied;

    bool operator==(const Corpus&) const = default;
};

// Key under which two records count as the same reference.
std::string dedup_key(const ReferenceRecord& record);

// Seed TSV: header row then raw_key, chapter_tag, title, authors
// (semicolon-separated), year, doi. Lines starting with '#' are comments.
// Throws ParseError (with line number) or DataError("empty corpus").
Corpus parse_corpus(std::string_view document, const std::string& source_name = "<seed>");
Corpus parse_corpus_json(std::string_view document, const std::string& source_name = "<seed>");
Corpus load_corpus(const std::filesystem::path& path);

// One line per (record, chapter tag); parses back to an equal corpus.
std::string serialize_corpus(const Corpus& corpus);
std::string serialize_corpus_json(const Corpus& corpus);

struct ExclusionResult {
    Corpus corpus;
    // Requested keys that matched nothing.
    std::vector<std::string> absent_keys;
};

ExclusionResult apply_exclusions(const Corpus& corpus, const std::set<std::string>& exclusion_keys);

// One raw_key per line; blank lines and '#' comments ignored.
std::set<std::string> parse_exclusions(std::string_view document);

}  // namespace citescope
