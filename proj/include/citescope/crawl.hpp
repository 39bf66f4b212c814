#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "citescope/corpus.hpp"
#include "citescope/graph.hpp"
#include "citescope/provider.hpp"

namespace citescope {

struct CrawlStats {
    std::size_t seeds_resolved = 0;
    std::size_t seeds_unresolved = 0;
    std::array<std::size_t, 3> nodes_by_depth{0, 0, 0};
    std::size_t edges = 0;
    std::size_t requests_issued = 0;
    bool budget_exhausted = false;
    double completeness = 1.0;

    nlohmann::json to_json() const;
    static CrawlStats from_json(const nlohmann::json& j);
    bool operator==(const CrawlStats&) const = default;
};

struct CrawlOptions {
    int depth = 2;
    // Cap on citation-page requests; nullopt = unlimited.
    std::optional<std::int64_t> budget;
    int workers = 4;
};

struct CrawlResult {
    CitationGraph graph;
    CrawlStats stats;
};

// Backward crawl: level 0 = seeds, level 1 = their citers, level 2 =
// citers of level-1 papers. Targets of a level are paginated round-robin;
// each round visits open targets by descending in-degree found so far
// (ties by id) and stops early when the budget runs out. Fetches within a
// round run on `workers` threads; results are merged in round order, so
// the graph does not depend on thread timing.
CrawlResult build_backward_network(const std::vector<PaperId>& seeds, CitationProvider& provider,
                                   const CrawlOptions& options);

struct ResolvedSeed {
    std::string raw_key;
    PaperId paper;
    std::set<std::string> chapter_tags;
};

struct SeedResolution {
    std::vector<ResolvedSeed> resolved;
    std::vector<std::string> unresolved;  // raw keys

    std::vector<PaperId> papers() const;
    // Chapter tag -> seed paper ids.
    std::map<std::string, NodeSet> chapters() const;
};

SeedResolution resolve_seeds(const Corpus& corpus, CitationProvider& provider);

// seeds.tsv: raw_key, paper_id, chapter_tags (semicolon-separated).
void write_seeds(const SeedResolution& seeds, const std::filesystem::path& path, const std::string& header_comment = {});
SeedResolution read_seeds(const std::filesystem::path& path);

}  // namespace citescope
