#include "citescope/config.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <variant>
#include <vector>

#include "citescope/error.hpp"
#include "citescope/hash.hpp"
#include "citescope/text.hpp"
#include "citescope/tsv.hpp"

namespace citescope {

namespace {

using Value = std::variant<std::string, std::int64_t, double, bool>;

// Malformed configuration is a usage problem, not bad input data.
UsageError syntax_error(const std::string& source, std::size_t line, const std::string& what) {
    return UsageError(source + ":" + std::to_string(line) + ": " + what);
}

struct Entry {
    Value value;
    std::size_t line;
};

std::string strip_comment(std::string_view line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '\\' && in_string) {
            ++i;
            continue;
        }
        if (c == '"') in_string = !in_string;
        if (c == '#' && !in_string) return std::string(line.substr(0, i));
    }
    return std::string(line);
}

Value parse_value(const std::string& raw, const std::string& source, std::size_t line) {
    if (raw.empty()) throw syntax_error(source, line, "missing value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') throw syntax_error(source, line, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
            char c = raw[i];
            if (c == '\\' && i + 2 < raw.size()) {
                const char e = raw[++i];
                switch (e) {
                    case 'n': c = '\n'; break;
                    case 't': c = '\t'; break;
                    case '"': c = '"'; break;
                    case '\\': c = '\\'; break;
                    default: throw syntax_error(source, line, std::string("unknown escape \\") + e);
                }
            }
            out.push_back(c);
        }
        return out;
    }
    if (raw == "true") return true;
    if (raw == "false") return false;
    std::string digits = raw;
    std::erase(digits, '_');
    char* end = nullptr;
    if (digits.find_first_of(".eE") == std::string::npos || digits.find_first_of("xX") != std::string::npos) {
        const long long v = std::strtoll(digits.c_str(), &end, 10);
        if (end && *end == '\0' && !digits.empty()) return static_cast<std::int64_t>(v);
    }
    const double d = std::strtod(digits.c_str(), &end);
    if (end && *end == '\0' && !digits.empty()) return d;
    throw syntax_error(source, line, "cannot parse value '" + raw + "'");
}

class Reader {
public:
    Reader(std::map<std::string, Entry> entries, std::string source)
        : entries_(std::move(entries)), source_(std::move(source)) {}

    template <typename Fn>
    void take(const std::string& key, Fn&& apply) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return;
        try {
            apply(it->second.value);
        } catch (const std::bad_variant_access&) {
            throw UsageError(source_ + ":" + std::to_string(it->second.line) + ": wrong type for '" + key + "'");
        }
        entries_.erase(it);
    }

    void finish() const {
        if (entries_.empty()) return;
        const auto& [key, e] = *entries_.begin();
        throw UsageError(source_ + ":" + std::to_string(e.line) + ": unknown key '" + key + "'");
    }

private:
    std::map<std::string, Entry> entries_;
    std::string source_;
};

std::string as_string(const Value& v) { return std::get<std::string>(v); }
std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }
bool as_bool(const Value& v) { return std::get<bool>(v); }
double as_double(const Value& v) {
    if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
}

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string file_digest(const std::filesystem::path& p) {
    if (p.empty()) return "none";
    if (!std::filesystem::exists(p)) return "missing";
    return sha256_file(p);
}

}  // namespace

void PipelineConfig::validate() const {
    if (depth != 1 && depth != 2) throw UsageError("depth must be 1 or 2");
    if (!(resolution > 0)) throw UsageError("resolution must be > 0");
    if (!(main_community_threshold > 0 && main_community_threshold < 1)) {
        throw UsageError("main_community_threshold must be in (0, 1)");
    }
    if (budget && *budget <= 0) throw UsageError("budget must be > 0");
    if (workers < 1) throw UsageError("workers must be >= 1");
    if (inter_citation_top < 1) throw UsageError("inter_citation_top must be >= 1");
    if (top_members < 1) throw UsageError("top_members must be >= 1");
    if (seed_path.empty()) throw UsageError("seed_path is required");
    provider.validate();
}

std::string PipelineConfig::canonical_text() const {
    std::vector<std::string> lines{
        "budget=" + (budget ? std::to_string(*budget) : std::string("none")),
        "composition_level=" + to_string(composition_level),
        "depth=" + std::to_string(depth),
        "inter_citation_top=" + std::to_string(inter_citation_top),
        "main_community_threshold=" + g17(main_community_threshold),
        "provider.mode=" + std::string(provider.mode == ProviderMode::offline ? "offline" : "remote"),
        "provider.page_size=" + std::to_string(provider.page_size),
        "resolution=" + g17(resolution),
        "rng_seed=" + std::to_string(rng_seed),
        "similarity=" + std::string(similarity == SimilarityForm::dice ? "dice" : "jaccard"),
        "std_mode=" + std::string(std_mode == StdMode::population ? "population" : "sample"),
        "top_members=" + std::to_string(top_members),
        "weighted_symmetrize=" + std::string(weighted_symmetrize ? "true" : "false"),
        "seed_sha256=" + file_digest(seed_path),
        "exclusions_sha256=" + file_digest(exclusions_path),
    };
    if (provider.mode == ProviderMode::offline) {
        lines.push_back("snapshot_nodes_sha256=" + file_digest(provider.snapshot_path / "nodes.tsv"));
        lines.push_back("snapshot_edges_sha256=" + file_digest(provider.snapshot_path / "edges.tsv"));
    } else {
        lines.push_back("provider.endpoint_url=" + provider.endpoint_url);
    }
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

std::string PipelineConfig::hash() const { return sha256_hex(canonical_text()); }

PipelineConfig parse_config(std::string_view document, const std::filesystem::path& base_dir,
                            const std::string& source_name) {
    std::map<std::string, Entry> entries;
    std::string table;
    std::size_t line_no = 0;
    for (const auto& raw_line : text::split(document, '\n')) {
        ++line_no;
        auto line = text::normalize_whitespace(strip_comment(raw_line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw syntax_error(source_name, line_no, "malformed table header");
            table = text::normalize_whitespace(line.substr(1, line.size() - 2));
            if (table != "provider") throw UsageError(source_name + ":" + std::to_string(line_no) + ": unknown table [" + table + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw syntax_error(source_name, line_no, "expected key = value");
        auto key = text::normalize_whitespace(line.substr(0, eq));
        const auto value = text::normalize_whitespace(line.substr(eq + 1));
        if (key.empty()) throw syntax_error(source_name, line_no, "empty key");
        if (!table.empty()) key = table + "." + key;
        if (entries.count(key)) throw syntax_error(source_name, line_no, "duplicate key '" + key + "'");
        entries.emplace(key, Entry{parse_value(value, source_name, line_no), line_no});
    }

    auto path = [&](const Value& v) {
        std::filesystem::path p = as_string(v);
        if (p.empty() || p.is_absolute()) return p;
        return (base_dir / p).lexically_normal();
    };

    PipelineConfig c;
    c.output_dir = (base_dir / c.output_dir).lexically_normal();
    Reader r(std::move(entries), source_name);
    r.take("seed_path", [&](const Value& v) { c.seed_path = path(v); });
    r.take("exclusions_path", [&](const Value& v) { c.exclusions_path = path(v); });
    r.take("output_dir", [&](const Value& v) { c.output_dir = path(v); });
    r.take("depth", [&](const Value& v) { c.depth = static_cast<int>(as_int(v)); });
    r.take("budget", [&](const Value& v) { c.budget = as_int(v); });
    r.take("workers", [&](const Value& v) { c.workers = static_cast<int>(as_int(v)); });
    r.take("resolution", [&](const Value& v) { c.resolution = as_double(v); });
    r.take("rng_seed", [&](const Value& v) {
        const auto s = as_int(v);
        if (s < 0) throw UsageError("rng_seed must be >= 0");
        c.rng_seed = static_cast<std::uint64_t>(s);
    });
    r.take("main_community_threshold", [&](const Value& v) { c.main_community_threshold = as_double(v); });
    r.take("composition_level", [&](const Value& v) { c.composition_level = composition_level_from_string(as_string(v)); });
    r.take("weighted_symmetrize", [&](const Value& v) { c.weighted_symmetrize = as_bool(v); });
    r.take("similarity", [&](const Value& v) {
        const auto s = as_string(v);
        if (s == "dice") c.similarity = SimilarityForm::dice;
        else if (s == "jaccard") c.similarity = SimilarityForm::jaccard;
        else throw UsageError("similarity must be dice or jaccard");
    });
    r.take("std_mode", [&](const Value& v) {
        const auto s = as_string(v);
        if (s == "population") c.std_mode = StdMode::population;
        else if (s == "sample") c.std_mode = StdMode::sample;
        else throw UsageError("std_mode must be population or sample");
    });
    r.take("inter_citation_top", [&](const Value& v) { c.inter_citation_top = static_cast<int>(as_int(v)); });
    r.take("top_members", [&](const Value& v) { c.top_members = static_cast<int>(as_int(v)); });
    r.take("plot_data", [&](const Value& v) { c.plot_data = as_bool(v); });

    auto& p = c.provider;
    r.take("provider.mode", [&](const Value& v) {
        const auto s = as_string(v);
        if (s == "offline") p.mode = ProviderMode::offline;
        else if (s == "remote") p.mode = ProviderMode::remote;
        else throw UsageError("provider.mode must be offline or remote");
    });
    r.take("provider.snapshot_path", [&](const Value& v) { p.snapshot_path = path(v); });
    r.take("provider.endpoint_url", [&](const Value& v) { p.endpoint_url = as_string(v); });
    r.take("provider.resolve_url", [&](const Value& v) { p.resolve_url = as_string(v); });
    r.take("provider.api_key", [&](const Value& v) { p.api_key = as_string(v); });
    r.take("provider.api_key_header", [&](const Value& v) { p.api_key_header = as_string(v); });
    r.take("provider.rate_limit_per_sec", [&](const Value& v) { p.rate_limit_per_sec = as_double(v); });
    r.take("provider.max_retries", [&](const Value& v) { p.max_retries = static_cast<int>(as_int(v)); });
    r.take("provider.page_size", [&](const Value& v) { p.page_size = static_cast<int>(as_int(v)); });
    r.take("provider.backoff_initial_ms", [&](const Value& v) { p.backoff_initial = std::chrono::milliseconds(as_int(v)); });
    r.take("provider.timeout_ms", [&](const Value& v) { p.timeout = std::chrono::milliseconds(as_int(v)); });
    r.take("provider.cache_path", [&](const Value& v) { p.cache_path = path(v); });
    r.finish();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return parse_config(read_file(path), base, path.string());
}

}  // namespace citescope
