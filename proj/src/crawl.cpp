#include "citescope/crawl.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <unordered_map>

#include "citescope/error.hpp"
#include "citescope/text.hpp"
#include "citescope/tsv.hpp"

namespace citescope {

nlohmann::json CrawlStats::to_json() const {
    nlohmann::json j;
    j["seeds_resolved"] = seeds_resolved;
    j["seeds_unresolved"] = seeds_unresolved;
    j["nodes_by_depth"] = nodes_by_depth;
    j["nodes"] = nodes_by_depth[0] + nodes_by_depth[1] + nodes_by_depth[2];
    j["edges"] = edges;
    j["requests_issued"] = requests_issued;
    j["budget_exhausted"] = budget_exhausted;
    j["completeness"] = std::stod(text::fixed(completeness));
    return j;
}

CrawlStats CrawlStats::from_json(const nlohmann::json& j) {
    CrawlStats s;
    s.seeds_resolved = j.at("seeds_resolved").get<std::size_t>();
    s.seeds_unresolved = j.value("seeds_unresolved", std::size_t{0});
    s.nodes_by_depth = j.at("nodes_by_depth").get<std::array<std::size_t, 3>>();
    s.edges = j.value("edges", std::size_t{0});
    s.requests_issued = j.at("requests_issued").get<std::size_t>();
    s.budget_exhausted = j.at("budget_exhausted").get<bool>();
    s.completeness = j.at("completeness").get<double>();
    return s;
}

namespace {

struct Target {
    PaperId paper;
    std::optional<std::string> cursor;
    bool done = false;
    bool complete = false;
};

struct FetchOutcome {
    std::optional<CitationPage> page;  // nullopt: provider does not know the id
    std::exception_ptr error;
};

std::vector<FetchOutcome> fetch_batch(CitationProvider& provider, const std::vector<Target*>& batch, int workers) {
    std::vector<FetchOutcome> out(batch.size());
    auto fetch_one = [&](std::size_t i) {
        try {
            out[i].page = provider.fetch_citers(batch[i]->paper, batch[i]->cursor);
        } catch (const NotFoundError&) {
            out[i].page.reset();
        } catch (...) {
            out[i].error = std::current_exception();
        }
    };
    const std::size_t n_threads = std::min<std::size_t>(std::max(workers, 1), batch.size());
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < batch.size(); ++i) fetch_one(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < batch.size(); i = next++) fetch_one(i);
        });
    }
    for (auto& th : threads) th.join();
    return out;
}

class Crawler {
public:
    Crawler(CitationProvider& provider, const CrawlOptions& options) : provider_(provider), options_(options) {
        if (options.budget) remaining_ = *options.budget;
    }

    void add_seed(const PaperId& p) {
        NodeInfo info{p.id, p.title, p.year, 0, false};
        builder_.add_node(std::move(info));
    }

    // Paginates every target to completion or until the budget runs out.
    // New citers enter the graph at citer_depth.
    std::vector<std::string> expand(std::vector<std::string> target_ids, int citer_depth) {
        std::vector<Target> targets;
        targets.reserve(target_ids.size());
        for (const auto& id : target_ids) {
            const NodeInfo* n = builder_.find_node(id);
            targets.push_back(Target{PaperId{n->id, n->title, n->year}, std::nullopt, false, false});
        }
        std::vector<std::string> discovered;
        std::vector<Target*> open;
        for (auto& t : targets) open.push_back(&t);

        while (!open.empty()) {
            std::stable_sort(open.begin(), open.end(), [&](const Target* a, const Target* b) {
                const auto da = in_degree(a->paper.id), db = in_degree(b->paper.id);
                if (da != db) return da > db;
                return a->paper.id < b->paper.id;
            });
            std::size_t take = open.size();
            if (remaining_) {
                if (*remaining_ <= 0) {
                    budget_exhausted_ = true;
                    break;
                }
                take = std::min<std::size_t>(take, static_cast<std::size_t>(*remaining_));
                *remaining_ -= static_cast<std::int64_t>(take);
            }
            std::vector<Target*> batch(open.begin(), open.begin() + static_cast<std::ptrdiff_t>(take));
            auto outcomes = fetch_batch(provider_, batch, options_.workers);
            requests_ += take;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (outcomes[i].error) std::rethrow_exception(outcomes[i].error);
                Target& t = *batch[i];
                if (!outcomes[i].page) {
                    t.done = true;
                    t.complete = false;
                    continue;
                }
                const auto& page = *outcomes[i].page;
                for (const auto& citer : page.citers) {
                    if (citer.id.empty() || citer.id == t.paper.id) continue;
                    if (!builder_.has_node(citer.id)) {
                        builder_.add_node(NodeInfo{citer.id, citer.title, citer.year, citer_depth, false});
                        discovered.push_back(citer.id);
                    }
                    if (builder_.add_edge(citer.id, t.paper.id) && seen_edges_.insert(edge_key(citer.id, t.paper.id)).second) {
                        ++in_degree_[t.paper.id];
                    }
                }
                t.cursor = page.cursor;
                if (!page.cursor) {
                    t.done = true;
                    t.complete = page.complete;
                }
            }
            std::erase_if(open, [](const Target* t) { return t->done; });
        }
        if (!open.empty()) budget_exhausted_ = true;
        for (const auto& t : targets) {
            if (t.done && t.complete) builder_.find_node(t.paper.id)->fully_resolved = true;
        }
        return discovered;
    }

    CrawlResult finish() && {
        CrawlResult result;
        result.stats.requests_issued = requests_;
        result.stats.budget_exhausted = budget_exhausted_;
        result.graph = std::move(builder_).build();
        for (const auto& n : result.graph.nodes()) ++result.stats.nodes_by_depth[static_cast<std::size_t>(n.depth)];
        result.stats.edges = result.graph.edge_count();
        result.stats.completeness = completeness_fraction(result.graph);
        return result;
    }

private:
    static std::string edge_key(const std::string& from, const std::string& to) { return from + '\x1f' + to; }

    std::size_t in_degree(const std::string& id) const {
        auto it = in_degree_.find(id);
        return it == in_degree_.end() ? 0 : it->second;
    }

    CitationProvider& provider_;
    const CrawlOptions& options_;
    GraphBuilder builder_{true};
    std::optional<std::int64_t> remaining_;
    std::size_t requests_ = 0;
    bool budget_exhausted_ = false;
    std::unordered_map<std::string, std::size_t> in_degree_;
    std::set<std::string> seen_edges_;
};

}  // namespace

CrawlResult build_backward_network(const std::vector<PaperId>& seeds, CitationProvider& provider,
                                   const CrawlOptions& options) {
    if (options.depth != 1 && options.depth != 2) throw UsageError("crawl depth must be 1 or 2");
    if (options.budget && *options.budget <= 0) throw UsageError("crawl budget must be > 0");
    if (seeds.empty()) throw DataError("no resolvable seeds to crawl from");

    Crawler crawler(provider, options);
    std::vector<std::string> seed_ids;
    for (const auto& s : seeds) {
        if (s.id.empty()) throw DataError("seed with empty id");
        crawler.add_seed(s);
        seed_ids.push_back(s.id);
    }
    std::sort(seed_ids.begin(), seed_ids.end());
    seed_ids.erase(std::unique(seed_ids.begin(), seed_ids.end()), seed_ids.end());

    auto level1 = crawler.expand(seed_ids, 1);
    if (options.depth == 2) {
        std::sort(level1.begin(), level1.end());
        crawler.expand(level1, 2);
    }
    auto result = std::move(crawler).finish();
    result.stats.seeds_resolved = seed_ids.size();
    return result;
}

// ---------------------------------------------------------------------------
// Seeds

std::vector<PaperId> SeedResolution::papers() const {
    std::vector<PaperId> out;
    for (const auto& s : resolved) out.push_back(s.paper);
    return out;
}

std::map<std::string, NodeSet> SeedResolution::chapters() const {
    std::map<std::string, std::vector<std::string>> members;
    for (const auto& s : resolved) {
        for (const auto& tag : s.chapter_tags) members[tag].push_back(s.paper.id);
    }
    std::map<std::string, NodeSet> out;
    for (auto& [tag, ids] : members) out.emplace(tag, NodeSet(tag, std::move(ids)));
    return out;
}

SeedResolution resolve_seeds(const Corpus& corpus, CitationProvider& provider) {
    SeedResolution out;
    for (const auto& record : corpus.records) {
        auto paper = provider.resolve_reference(record);
        if (!paper) {
            out.unresolved.push_back(record.raw_key);
            continue;
        }
        out.resolved.push_back(ResolvedSeed{record.raw_key, std::move(*paper), record.chapter_tags});
    }
    return out;
}

void write_seeds(const SeedResolution& seeds, const std::filesystem::path& path, const std::string& header_comment) {
    std::string out;
    if (!header_comment.empty()) out += "# " + header_comment + "\n";
    out += "raw_key\tpaper_id\ttitle\tyear\tchapter_tags\n";
    for (const auto& s : seeds.resolved) {
        out += text::tsv_clean(s.raw_key) + "\t" + s.paper.id + "\t" + text::tsv_clean(s.paper.title.value_or("")) +
               "\t" + (s.paper.year ? std::to_string(*s.paper.year) : std::string()) + "\t" +
               text::join(std::vector<std::string>(s.chapter_tags.begin(), s.chapter_tags.end()), ";") + "\n";
    }
    for (const auto& key : seeds.unresolved) out += text::tsv_clean(key) + "\t\t\t\t\n";
    write_file(path, out);
}

SeedResolution read_seeds(const std::filesystem::path& path) {
    const auto table = read_tsv(path);
    const auto key_col = table.require_column("raw_key");
    const auto id_col = table.require_column("paper_id");
    const auto title_col = table.require_column("title");
    const auto year_col = table.require_column("year");
    const auto tags_col = table.require_column("chapter_tags");
    SeedResolution out;
    for (const auto& row : table.rows) {
        if (row[id_col].empty()) {
            out.unresolved.push_back(row[key_col]);
            continue;
        }
        ResolvedSeed s;
        s.raw_key = row[key_col];
        s.paper.id = row[id_col];
        if (!row[title_col].empty()) s.paper.title = row[title_col];
        if (!row[year_col].empty()) s.paper.year = text::parse_int(row[year_col]);
        for (auto& tag : text::split(row[tags_col], ';')) {
            if (!tag.empty()) s.chapter_tags.insert(tag);
        }
        out.resolved.push_back(std::move(s));
    }
    return out;
}

}  // namespace citescope
