#include "citescope/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "citescope/error.hpp"
#include "citescope/text.hpp"

namespace citescope {

namespace {

constexpr std::size_t kSeedColumns = 6;

std::optional<std::string> non_empty(std::string s) {
    if (s.empty()) return std::nullopt;
    return s;
}

// Accumulates records in first-appearance order, merging duplicates.
class CorpusBuilder {
public:
    void add(ReferenceRecord record) {
        auto key = dedup_key(record);
        auto it = index_.find(key);
        if (it == index_.end()) {
            index_.emplace(std::move(key), records_.size());
            records_.push_back(std::move(record));
            return;
        }
        auto& existing = records_[it->second];
        existing.chapter_tags.insert(record.chapter_tags.begin(), record.chapter_tags.end());
        if (!existing.doi && record.doi) existing.doi = record.doi;
    }

    Corpus finish(const std::string& source_name) && {
        if (records_.empty()) throw DataError(source_name + ": empty corpus");
        return Corpus{std::move(records_), {}};
    }

private:
    std::vector<ReferenceRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

std::vector<std::string> parse_authors(std::string_view field) {
    std::vector<std::string> authors;
    for (auto& a : text::split(field, ';')) {
        auto name = text::normalize_whitespace(a);
        if (!name.empty()) authors.push_back(std::move(name));
    }
    return authors;
}

}  // namespace

std::string dedup_key(const ReferenceRecord& record) {
    std::string key = text::fold_title(record.title);
    key.push_back('|');
    if (record.year) key += std::to_string(*record.year);
    return key;
}

Corpus parse_corpus(std::string_view document, const std::string& source_name) {
    CorpusBuilder builder;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t start = 0;
    while (start <= document.size()) {
        auto end = document.find('\n', start);
        if (end == std::string_view::npos) end = document.size();
        std::string_view line = document.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;

        auto cols = text::split(line, '\t');
        if (!header_seen) {
            header_seen = true;
            if (cols.size() < kSeedColumns || cols[0] != "raw_key") {
                throw ParseError(source_name, line_no, "expected header row starting with raw_key");
            }
            continue;
        }
        if (cols.size() != kSeedColumns) {
            throw ParseError(source_name, line_no,
                             "expected " + std::to_string(kSeedColumns) + " tab-separated columns, got " +
                                 std::to_string(cols.size()));
        }
        ReferenceRecord r;
        r.raw_key = text::normalize_whitespace(cols[0]);
        if (r.raw_key.empty()) throw ParseError(source_name, line_no, "empty raw_key");
        auto tag = text::normalize_whitespace(cols[1]);
        if (tag.empty()) throw ParseError(source_name, line_no, "empty chapter_tag");
        r.chapter_tags.insert(std::move(tag));
        r.title = text::normalize_whitespace(cols[2]);
        if (r.title.empty()) throw ParseError(source_name, line_no, "empty title");
        r.authors = parse_authors(cols[3]);
        auto year_field = text::normalize_whitespace(cols[4]);
        if (!year_field.empty()) {
            r.year = text::parse_int(year_field);
            if (!r.year) throw ParseError(source_name, line_no, "invalid year '" + year_field + "'");
        }
        r.doi = non_empty(text::normalize_whitespace(cols[5]));
        builder.add(std::move(r));
    }
    return std::move(builder).finish(source_name);
}

Corpus parse_corpus_json(std::string_view document, const std::string& source_name) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(source_name, 0, e.what());
    }
    const nlohmann::json* list = &doc;
    std::vector<std::string> exclusions;
    if (doc.is_object()) {
        if (!doc.contains("records")) throw ParseError(source_name, 0, "missing \"records\"");
        list = &doc["records"];
        if (doc.contains("exclusions_applied")) {
            try {
                exclusions = doc["exclusions_applied"].get<std::vector<std::string>>();
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(source_name, 0, std::string("exclusions_applied: ") + e.what());
            }
        }
    }
    if (!list->is_array()) throw ParseError(source_name, 0, "records must be an array");

    CorpusBuilder builder;
    std::size_t n = 0;
    for (const auto& item : *list) {
        ++n;
        try {
            ReferenceRecord r;
            r.raw_key = text::normalize_whitespace(item.at("raw_key").get<std::string>());
            r.title = text::normalize_whitespace(item.at("title").get<std::string>());
            if (r.raw_key.empty()) throw DataError("empty raw_key");
            if (r.title.empty()) throw DataError("empty title");
            if (item.contains("authors")) {
                for (const auto& a : item["authors"]) r.authors.push_back(text::normalize_whitespace(a.get<std::string>()));
            }
            if (item.contains("year") && !item["year"].is_null()) r.year = item["year"].get<int>();
            if (item.contains("doi") && !item["doi"].is_null()) r.doi = non_empty(item["doi"].get<std::string>());
            for (const auto& t : item.at("chapter_tags")) {
                auto tag = text::normalize_whitespace(t.get<std::string>());
                if (!tag.empty()) r.chapter_tags.insert(std::move(tag));
            }
            if (r.chapter_tags.empty()) throw DataError("no chapter_tags");
            builder.add(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source_name, n, std::string("record: ") + e.what());
        } catch (const DataError& e) {
            throw ParseError(source_name, n, std::string("record: ") + e.what());
        }
    }
    auto corpus = std::move(builder).finish(source_name);
    corpus.exclusions_applied = std::move(exclusions);
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open seed file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    if (path.extension() == ".json") return parse_corpus_json(ss.str(), path.string());
    return parse_corpus(ss.str(), path.string());
}

std::string serialize_corpus(const Corpus& corpus) {
    std::string out = "raw_key\tchapter_tag\ttitle\tauthors\tyear\tdoi\n";
    for (const auto& r : corpus.records) {
        for (const auto& tag : r.chapter_tags) {
            out += text::tsv_clean(r.raw_key);
            out += '\t';
            out += text::tsv_clean(tag);
            out += '\t';
            out += text::tsv_clean(r.title);
            out += '\t';
            out += text::tsv_clean(text::join(r.authors, "; "));
            out += '\t';
            if (r.year) out += std::to_string(*r.year);
            out += '\t';
            if (r.doi) out += text::tsv_clean(*r.doi);
            out += '\n';
        }
    }
    return out;
}

std::string serialize_corpus_json(const Corpus& corpus) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : corpus.records) {
        nlohmann::json j;
        j["raw_key"] = r.raw_key;
        j["title"] = r.title;
        j["authors"] = r.authors;
        j["year"] = r.year ? nlohmann::json(*r.year) : nlohmann::json(nullptr);
        j["chapter_tags"] = r.chapter_tags;
        j["doi"] = r.doi ? nlohmann::json(*r.doi) : nlohmann::json(nullptr);
        records.push_back(std::move(j));
    }
    nlohmann::json doc;
    doc["records"] = std::move(records);
    doc["exclusions_applied"] = corpus.exclusions_applied;
    return doc.dump(2) + "\n";
}

ExclusionResult apply_exclusions(const Corpus& corpus, const std::set<std::string>& exclusion_keys) {
    ExclusionResult result;
    result.corpus.exclusions_applied = corpus.exclusions_applied;
    std::set<std::string> matched;
    for (const auto& r : corpus.records) {
        if (exclusion_keys.count(r.raw_key)) {
            matched.insert(r.raw_key);
            continue;
        }
        result.corpus.records.push_back(r);
    }
    for (const auto& key : exclusion_keys) {
        if (matched.count(key)) {
            result.corpus.exclusions_applied.push_back(key);
        } else {
            result.absent_keys.push_back(key);
        }
    }
    return result;
}

std::set<std::string> parse_exclusions(std::string_view document) {
    std::set<std::string> keys;
    for (auto& line : text::split(document, '\n')) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto key = text::normalize_whitespace(line);
        if (!key.empty()) keys.insert(std::move(key));
    }
    return keys;
}

}  // namespace citescope
