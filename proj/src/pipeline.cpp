#include "citescope/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <functional>
#include <set>

#include "citescope/community.hpp"
#include "citescope/corpus.hpp"
#include "citescope/crawl.hpp"
#include "citescope/error.hpp"
#include "citescope/export.hpp"
#include "citescope/graph.hpp"
#include "citescope/hash.hpp"
#include "citescope/language.hpp"
#include "citescope/metrics.hpp"
#include "citescope/text.hpp"
#include "citescope/tsv.hpp"

namespace citescope {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Stage stage) {
    switch (stage) {
        case Stage::ingest: return "ingest";
        case Stage::crawl: return "crawl";
        case Stage::component: return "component";
        case Stage::core: return "core";
        case Stage::symmetrize: return "symmetrize";
        case Stage::louvain: return "louvain";
        case Stage::subcommunities: return "sub-communities";
        case Stage::metrics: return "metrics";
        case Stage::export_graph: return "export";
    }
    return "unknown";
}

Stage stage_from_string(const std::string& s) {
    for (Stage st : all_stages) {
        if (to_string(st) == s) return st;
    }
    throw UsageError("unknown stage '" + s + "'");
}

json RunManifest::to_json() const {
    json j;
    j["tool_version"] = tool_version;
    j["config_hash"] = config_hash;
    json st = json::object();
    for (const auto& [name, r] : stages) {
        st[name] = {{"completed", r.completed},
                    {"completed_at", r.completed_at},
                    {"inputs", r.inputs},
                    {"outputs", r.outputs}};
    }
    j["stages"] = std::move(st);
    return j;
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    m.tool_version = j.value("tool_version", "");
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& [name, r] : j.at("stages").items()) {
        StageRecord rec;
        rec.completed = r.value("completed", false);
        rec.completed_at = r.value("completed_at", "");
        rec.inputs = r.value("inputs", std::map<std::string, std::string>{});
        rec.outputs = r.value("outputs", std::map<std::string, std::string>{});
        m.stages.emplace(name, std::move(rec));
    }
    return m;
}

fs::path manifest_path(const fs::path& output_dir) { return output_dir / "run_manifest.json"; }

std::optional<RunManifest> read_manifest(const fs::path& output_dir) {
    const auto path = manifest_path(output_dir);
    if (!fs::exists(path)) return std::nullopt;
    try {
        return RunManifest::from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": corrupt manifest: " + e.what());
    }
}

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class DirectoryLock {
public:
    explicit DirectoryLock(fs::path path) : path_(std::move(path)) {
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) {
            if (errno == EEXIST) {
                throw UsageError(path_.parent_path().string() + " is locked by another run (remove " + path_.string() +
                                 " if it is stale)");
            }
            throw Error("cannot create lock " + path_.string() + ": " + std::strerror(errno));
        }
        const auto pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
        ::close(fd);
    }
    ~DirectoryLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    fs::path path_;
};

struct Input {
    std::string file;
    Stage producer;
};

std::vector<Input> stage_inputs(Stage s) {
    switch (s) {
        case Stage::ingest: return {};
        case Stage::crawl: return {{"corpus.tsv", Stage::ingest}};
        case Stage::component:
            return {{"network/nodes.tsv", Stage::crawl}, {"network/edges.tsv", Stage::crawl}};
        case Stage::core:
            return {{"component/nodes.tsv", Stage::component}, {"component/edges.tsv", Stage::component}};
        case Stage::symmetrize: return {{"core/nodes.tsv", Stage::core}, {"core/edges.tsv", Stage::core}};
        case Stage::louvain:
            return {{"core/nodes.tsv", Stage::core},
                    {"core/edges.tsv", Stage::core},
                    {"symmetrized.tsv", Stage::symmetrize}};
        case Stage::subcommunities:
            return {{"core/nodes.tsv", Stage::core},
                    {"core/edges.tsv", Stage::core},
                    {"symmetrized.tsv", Stage::symmetrize},
                    {"partition.tsv", Stage::louvain}};
        case Stage::metrics:
            return {{"seeds.tsv", Stage::crawl},
                    {"network/nodes.tsv", Stage::crawl},
                    {"core/nodes.tsv", Stage::core},
                    {"core/edges.tsv", Stage::core},
                    {"partition.tsv", Stage::louvain}};
        case Stage::export_graph:
            return {{"core/nodes.tsv", Stage::core}, {"core/edges.tsv", Stage::core}, {"partition.tsv", Stage::louvain}};
    }
    return {};
}

class Runner {
public:
    Runner(const PipelineConfig& config, std::string hash)
        : c_(config), dir_(config.output_dir), hash_(std::move(hash)), comment_("config_hash: " + hash_) {}

    std::vector<std::string> run(Stage s) {
        written_.clear();
        switch (s) {
            case Stage::ingest: ingest(); break;
            case Stage::crawl: crawl(); break;
            case Stage::component: component(); break;
            case Stage::core: core(); break;
            case Stage::symmetrize: symmetrize_stage(); break;
            case Stage::louvain: louvain_stage(); break;
            case Stage::subcommunities: subcommunities(); break;
            case Stage::metrics: metrics(); break;
            case Stage::export_graph: export_stage(); break;
        }
        return written_;
    }

private:
    void put(const std::string& rel, const std::string& contents) {
        write_file(dir_ / rel, contents);
        written_.push_back(rel);
    }
    void put_json(const std::string& rel, json j) {
        j["config_hash"] = hash_;
        put(rel, j.dump(2) + "\n");
    }
    void put_graph(const std::string& rel_dir, const CitationGraph& g) {
        write_graph(g, dir_ / rel_dir, comment_);
        written_.push_back(rel_dir + "/nodes.tsv");
        written_.push_back(rel_dir + "/edges.tsv");
    }

    CitationGraph core_graph() const { return read_graph(dir_ / "core"); }
    CitationGraph symmetrized(const CitationGraph& core) const {
        return read_undirected(dir_ / "symmetrized.tsv", core);
    }
    LouvainOptions louvain_options() const {
        LouvainOptions o;
        o.resolution = c_.resolution;
        o.rng_seed = c_.rng_seed;
        return o;
    }

    void ingest() {
        const auto corpus = load_corpus(c_.seed_path);
        std::set<std::string> exclusions;
        if (!c_.exclusions_path.empty()) exclusions = parse_exclusions(read_file(c_.exclusions_path));
        const auto result = apply_exclusions(corpus, exclusions);
        put("corpus.tsv", "# " + comment_ + "\n" + serialize_corpus(result.corpus));
        std::set<std::string> chapters;
        for (const auto& r : result.corpus.records) chapters.insert(r.chapter_tags.begin(), r.chapter_tags.end());
        put_json("ingest_report.json", {{"records", result.corpus.records.size()},
                                        {"chapters", chapters},
                                        {"exclusions_applied", result.corpus.exclusions_applied},
                                        {"exclusions_absent", result.absent_keys}});
    }

    void crawl() {
        const auto corpus = load_corpus(dir_ / "corpus.tsv");
        auto provider = make_provider(c_.provider);
        const auto seeds = resolve_seeds(corpus, *provider);
        CrawlOptions opts;
        opts.depth = c_.depth;
        opts.budget = c_.budget;
        opts.workers = c_.workers;
        auto result = build_backward_network(seeds.papers(), *provider, opts);
        result.stats.seeds_unresolved = seeds.unresolved.size();
        write_seeds(seeds, dir_ / "seeds.tsv", comment_);
        written_.push_back("seeds.tsv");
        put_graph("network", result.graph);
        auto stats = result.stats.to_json();
        stats["unresolved_keys"] = seeds.unresolved;
        put_json("network/stats.json", std::move(stats));
    }

    void component() {
        const auto network = read_graph(dir_ / "network");
        const auto comp = largest_weak_component(network);
        put_graph("component", comp);
        put_json("component.json", {{"nodes", comp.node_count()},
                                    {"edges", comp.edge_count()},
                                    {"network_nodes", network.node_count()},
                                    {"coverage", rounded(static_cast<double>(comp.node_count()) /
                                                         static_cast<double>(network.node_count()))}});
    }

    void core() {
        const auto comp = read_graph(dir_ / "component");
        const auto core = prune_degree_one(comp);
        put_graph("core", core);
        put_json("core.json", {{"nodes", core.node_count()},
                               {"edges", core.edge_count()},
                               {"pruned_nodes", comp.node_count() - core.node_count()}});
    }

    void symmetrize_stage() {
        const auto sym = symmetrize(core_graph(), c_.weighted_symmetrize);
        write_undirected(sym, dir_ / "symmetrized.tsv", comment_);
        written_.push_back("symmetrized.tsv");
    }

    void louvain_stage() {
        const auto core = core_graph();
        const auto sym = symmetrized(core);
        const auto p = louvain(sym, louvain_options());
        write_partition(p, dir_ / "partition.tsv", comment_);
        written_.push_back("partition.tsv");
        json j;
        j["community_count"] = p.community_count();
        j["resolution"] = c_.resolution;
        j["rng_seed"] = c_.rng_seed;
        j["modularity"] = sym.edge_count() ? json(rounded(modularity_undirected(sym, p, c_.resolution))) : json(nullptr);
        j["directed_modularity"] = core.edge_count() ? json(rounded(modularity_directed(core, p))) : json(nullptr);
        j["main_threshold"] = c_.main_community_threshold;
        j["main_communities"] = main_communities(p, c_.main_community_threshold);
        j["summaries"] = summaries_to_json(community_size_distribution(core, p, c_.top_members), core);
        put_json("communities.json", std::move(j));
    }

    void subcommunities() {
        const auto core = core_graph();
        const auto sym = symmetrized(core);
        const auto p = read_partition(dir_ / "partition.tsv");
        json list = json::array();
        std::string tsv = "# " + comment_ + "\nnode_id\tcommunity_label\tsub_label\n";
        for (CommunityLabel label : main_communities(p, c_.main_community_threshold)) {
            const auto sub = sub_communities(sym, p, label, louvain_options());
            json j;
            j["label"] = label;
            j["size"] = sub.partition.size();
            j["sub_community_count"] = sub.partition.community_count();
            j["sub_sizes"] = sub.partition.community_sizes();
            j["modularity"] = sub.modularity ? json(rounded(*sub.modularity)) : json(nullptr);
            list.push_back(std::move(j));
            for (std::size_t i = 0; i < sub.partition.size(); ++i) {
                tsv += sub.partition.node_ids[i] + "\t" + std::to_string(label) + "\t" +
                       std::to_string(sub.partition.labels[i]) + "\n";
            }
        }
        put_json("subcommunities.json", {{"communities", std::move(list)}});
        put("subpartition.tsv", tsv);
    }

    void put_matrix(const std::string& name, const MetricsMatrix& m, json& matrices) {
        put("metrics/" + name + ".csv", matrix_to_csv(m, comment_));
        if (c_.plot_data) put("metrics/" + name + ".long.tsv", matrix_to_long_tsv(m, comment_));
        matrices[name] = matrix_to_json(m);
    }

    void metrics() {
        const auto core = core_graph();
        const auto p = read_partition(dir_ / "partition.tsv");
        const auto seeds = read_seeds(dir_ / "seeds.tsv");
        json summary;
        json matrices = json::object();

        const auto main = main_communities(p, c_.main_community_threshold);
        const auto sizes = p.community_sizes();
        summary["main_communities"] = main;
        {
            std::vector<double> main_sizes;
            for (auto l : main) main_sizes.push_back(static_cast<double>(sizes[l]));
            json rs;
            rs["sizes"] = main_sizes;
            rs["fit"] = main_sizes.size() >= 2 ? fit_to_json(rank_size_fit(main_sizes)) : json(nullptr);
            summary["rank_size"] = std::move(rs);
        }

        {
            const auto labels = p.aligned_to(core);
            std::vector<std::size_t> outgoing(p.community_count(), 0);
            for (const auto& e : core.edges()) ++outgoing[labels[e.first]];
            std::vector<CommunityLabel> selected, excluded;
            for (auto l : main) {
                if (outgoing[l] == 0) {
                    excluded.push_back(l);
                } else if (selected.size() < static_cast<std::size_t>(c_.inter_citation_top)) {
                    selected.push_back(l);
                }
            }
            summary["inter_citation"] = {{"selected", selected}, {"excluded_no_outgoing", excluded}};
            if (!selected.empty()) put_matrix("inter_citation", inter_citation_matrix(core, p, selected), matrices);
        }

        std::vector<NodeSet> subnetworks;
        std::vector<NodeSet> counted;
        json chapters = json::array();
        for (const auto& [tag, seed_set] : seeds.chapters()) {
            std::vector<std::string> in_core;
            for (const auto& id : seed_set.members) {
                if (core.find(id)) in_core.push_back(id);
            }
            json ch;
            ch["chapter"] = tag;
            ch["seeds"] = seed_set.size();
            ch["seeds_in_core"] = in_core.size();
            NodeSet sub = in_core.empty() ? NodeSet(tag, {}) : chapter_subnetwork(core, NodeSet(tag, in_core));
            sub.label = tag;
            std::size_t n_counted = 0;
            for (const auto& id : sub.members) {
                if (c_.composition_level == CompositionLevel::all_nodes || core.node(*core.find(id)).depth == 1) {
                    ++n_counted;
                }
            }
            ch["subnetwork_size"] = sub.size();
            ch["counted_nodes"] = n_counted;
            chapters.push_back(std::move(ch));
            if (!sub.empty()) subnetworks.push_back(sub);
            if (n_counted > 0) counted.push_back(std::move(sub));
        }
        if (subnetworks.size() >= 2) put_matrix("jaccard", jaccard_matrix(subnetworks, c_.similarity), matrices);

        std::map<std::string, double> herfindahl;
        if (!counted.empty()) {
            const auto comp = composition_matrix(core, counted, p, c_.composition_level);
            put_matrix("composition", comp, matrices);
            if (comp.rows() >= 2) put_matrix("composition_znorm", znormalize_columns(comp, c_.std_mode), matrices);
            std::string csv = "# " + comment_ + "\nchapter,herfindahl\n";
            for (std::size_t r = 0; r < comp.rows(); ++r) {
                const double h = herfindahl_index(comp.values[r]);
                herfindahl[comp.row_labels[r]] = rounded(h);
                csv += comp.row_labels[r] + "," + text::fixed(h) + "\n";
            }
            put("metrics/herfindahl.csv", csv);
        }
        for (auto& ch : chapters) {
            auto it = herfindahl.find(ch["chapter"].get<std::string>());
            ch["herfindahl"] = it == herfindahl.end() ? json(nullptr) : json(it->second);
        }
        summary["chapters"] = std::move(chapters);
        summary["composition_level"] = to_string(c_.composition_level);

        const auto network = read_graph(dir_ / "network");
        std::vector<std::string> titles;
        for (const auto& n : network.nodes()) {
            if (n.title && !text::normalize_whitespace(*n.title).empty()) titles.push_back(*n.title);
        }
        json shares = json::object();
        if (!titles.empty()) {
            for (const auto& [code, share] : language_shares(titles)) shares[code] = rounded(share);
        }
        summary["language_shares"] = std::move(shares);
        summary["language_titles"] = titles.size();

        put_json("metrics/matrices.json", {{"matrices", std::move(matrices)}});
        put_json("metrics/summary.json", std::move(summary));
    }

    void export_stage() {
        const auto core = core_graph();
        const auto p = read_partition(dir_ / "partition.tsv");
        export_graph(core, p, ExportFormat::graphml, dir_ / "export/core.graphml", hash_);
        written_.push_back("export/core.graphml");
        export_graph(core, p, ExportFormat::edgelist, dir_ / "export/core.edgelist.tsv", hash_);
        written_.push_back("export/core.edgelist.tsv");
    }

    const PipelineConfig& c_;
    fs::path dir_;
    std::string hash_;
    std::string comment_;
    std::vector<std::string> written_;
};

bool files_match(const fs::path& dir, const std::map<std::string, std::string>& files) {
    for (const auto& [rel, sha] : files) {
        const auto p = dir / rel;
        if (!fs::exists(p) || sha256_file(p) != sha) return false;
    }
    return true;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages,
                            const PipelineOptions& options) {
    config.validate();
    const fs::path dir = config.output_dir;
    fs::create_directories(dir);
    DirectoryLock lock(dir / ".citescope.lock");

    const auto hash = config.hash();
    RunManifest manifest;
    if (auto existing = read_manifest(dir)) {
        if (existing->config_hash != hash && !options.force) {
            throw UsageError("config hash " + hash + " differs from the one recorded in " +
                             manifest_path(dir).string() + " (" + existing->config_hash + "); use --force to rerun");
        }
        if (existing->config_hash == hash) manifest = std::move(*existing);
    }
    manifest.tool_version = CITESCOPE_VERSION;
    manifest.config_hash = hash;

    std::set<Stage> wanted(stages.begin(), stages.end());
    Runner runner(config, hash);
    PipelineResult result;
    for (Stage s : all_stages) {
        if (!wanted.count(s)) continue;
        const auto name = to_string(s);
        std::map<std::string, std::string> inputs;
        for (const auto& in : stage_inputs(s)) {
            const auto p = dir / in.file;
            if (!fs::exists(p)) {
                throw UsageError("missing " + p.string() + ": run " + to_string(in.producer) + " first");
            }
            inputs[in.file] = sha256_file(p);
        }
        auto it = manifest.stages.find(name);
        if (it != manifest.stages.end() && it->second.completed && it->second.inputs == inputs &&
            files_match(dir, it->second.outputs)) {
            result.outcomes.push_back({s, true});
            continue;
        }
        const auto written = runner.run(s);
        StageRecord rec;
        rec.completed = true;
        rec.completed_at = utc_now();
        rec.inputs = std::move(inputs);
        for (const auto& rel : written) rec.outputs[rel] = sha256_file(dir / rel);
        if (it != manifest.stages.end()) {
            for (const auto& [rel, sha] : it->second.outputs) {
                if (!rec.outputs.count(rel)) fs::remove(dir / rel);
            }
        }
        manifest.stages[name] = std::move(rec);
        write_file(manifest_path(dir), manifest.to_json().dump(2) + "\n");
        result.outcomes.push_back({s, false});
    }
    write_file(manifest_path(dir), manifest.to_json().dump(2) + "\n");
    result.manifest = std::move(manifest);
    return result;
}

}  // namespace citescope
