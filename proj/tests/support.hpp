// Test helpers: random graphs, naive oracles and a local citation server.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "citescope/community.hpp"
#include "citescope/graph.hpp"
#include "citescope/provider.hpp"
#include "citescope/tsv.hpp"

namespace cs_test {

using namespace citescope;

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("citescope-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::string node_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "n%05zu", i);
    return buf;
}

inline CitationGraph graph_from_pairs(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                      bool directed) {
    GraphBuilder b(true);
    for (std::size_t i = 0; i < n; ++i) b.add_node(NodeInfo{node_name(i), std::nullopt, std::nullopt, 0, true});
    for (auto [u, v] : edges) b.add_edge(node_name(u), node_name(v));
    auto g = std::move(b).build();
    return directed ? g : symmetrize(g);
}

inline CitationGraph random_graph(std::size_t n, double p, bool directed, std::mt19937_64& rng) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v || (!directed && v < u)) continue;
            if (uniform01(rng) < p) edges.emplace_back(u, v);
        }
    }
    return graph_from_pairs(n, edges, directed);
}

inline std::vector<CommunityLabel> random_labels(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<CommunityLabel> labels(n);
    for (auto& l : labels) l = static_cast<CommunityLabel>(uniform_below(rng, k));
    // Make labels contiguous.
    std::map<CommunityLabel, CommunityLabel> remap;
    for (auto& l : labels) l = remap.emplace(l, static_cast<CommunityLabel>(remap.size())).first->second;
    return labels;
}

// Q from the definition with a dense adjacency matrix.
inline double naive_modularity_undirected(const CitationGraph& g, const std::vector<CommunityLabel>& c,
                                          double gamma = 1.0) {
    const std::size_t n = g.node_count();
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    const auto edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        a[edges[e].first][edges[e].second] += g.weight(e);
        a[edges[e].second][edges[e].first] += g.weight(e);
    }
    std::vector<double> k(n, 0.0);
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i] += a[i][j];
        two_m += k[i];
    }
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (c[i] == c[j]) q += a[i][j] - gamma * k[i] * k[j] / two_m;
        }
    }
    return q / two_m;
}

inline double naive_modularity_directed(const CitationGraph& g, const std::vector<CommunityLabel>& c) {
    const std::size_t n = g.node_count();
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (auto [u, v] : g.edges()) a[u][v] = 1.0;
    std::vector<double> kout(n, 0.0), kin(n, 0.0);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            kout[i] += a[i][j];
            kin[j] += a[i][j];
            m += a[i][j];
        }
    }
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (c[i] == c[j]) q += a[i][j] - kout[i] * kin[j] / m;
        }
    }
    return q / m;
}

inline std::vector<std::size_t> total_degrees(const CitationGraph& g, const std::set<NodeIndex>& alive) {
    std::vector<std::size_t> deg(g.node_count(), 0);
    for (auto [u, v] : g.edges()) {
        if (alive.count(u) && alive.count(v)) {
            ++deg[u];
            ++deg[v];
        }
    }
    return deg;
}

// Drops every node of degree <= 1 at once, repeatedly.
inline std::set<std::string> repeat_filter_prune(const CitationGraph& g) {
    std::set<NodeIndex> alive;
    for (NodeIndex v = 0; v < g.node_count(); ++v) alive.insert(v);
    while (true) {
        const auto deg = total_degrees(g, alive);
        std::set<NodeIndex> next;
        for (auto v : alive) {
            if (deg[v] >= 2) next.insert(v);
        }
        if (next.size() == alive.size()) break;
        alive = std::move(next);
    }
    std::set<std::string> ids;
    for (auto v : alive) ids.insert(g.node(v).id);
    return ids;
}

// Deletes one random degree <= 1 node at a time.
inline std::set<std::string> random_order_prune(const CitationGraph& g, std::mt19937_64& rng) {
    std::set<NodeIndex> alive;
    for (NodeIndex v = 0; v < g.node_count(); ++v) alive.insert(v);
    while (true) {
        const auto deg = total_degrees(g, alive);
        std::vector<NodeIndex> low;
        for (auto v : alive) {
            if (deg[v] <= 1) low.push_back(v);
        }
        if (low.empty()) break;
        alive.erase(low[uniform_below(rng, low.size())]);
    }
    std::set<std::string> ids;
    for (auto v : alive) ids.insert(g.node(v).id);
    return ids;
}

// Component label per node by repeated relaxation to the minimum index.
inline std::vector<std::size_t> brute_components(const CitationGraph& g) {
    std::vector<std::size_t> comp(g.node_count());
    for (std::size_t v = 0; v < comp.size(); ++v) comp[v] = v;
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto [u, v] : g.edges()) {
            const auto m = std::min(comp[u], comp[v]);
            if (comp[u] != m || comp[v] != m) {
                comp[u] = comp[v] = m;
                changed = true;
            }
        }
    }
    return comp;
}

inline std::set<std::string> ids_of(const CitationGraph& g) {
    std::set<std::string> out;
    for (const auto& n : g.nodes()) out.insert(n.id);
    return out;
}

// Normalized mutual information, arithmetic-mean normalization.
inline double nmi(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    const double n = static_cast<double>(a.size());
    std::map<std::uint32_t, double> pa, pb;
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> pab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        pa[a[i]] += 1.0 / n;
        pb[b[i]] += 1.0 / n;
        pab[{a[i], b[i]}] += 1.0 / n;
    }
    double mi = 0.0, ha = 0.0, hb = 0.0;
    for (const auto& [k, p] : pab) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
    for (const auto& [k, p] : pa) ha -= p * std::log(p);
    for (const auto& [k, p] : pb) hb -= p * std::log(p);
    if (ha + hb == 0.0) return 1.0;
    return 2.0 * mi / (ha + hb);
}

struct Planted {
    CitationGraph graph;
    std::vector<std::uint32_t> blocks;  // per node index
};

inline Planted planted_partition(std::size_t n_blocks, std::size_t block_size, double p_in, double p_out,
                                 std::mt19937_64& rng) {
    const std::size_t n = n_blocks * block_size;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            const bool same = u / block_size == v / block_size;
            if (uniform01(rng) < (same ? p_in : p_out)) edges.emplace_back(u, v);
        }
    }
    Planted out{graph_from_pairs(n, edges, false), {}};
    for (std::size_t i = 0; i < n; ++i) out.blocks.push_back(static_cast<std::uint32_t>(i / block_size));
    return out;
}

// Two 4-cliques {0..3}, {4..7} joined by the edge 3-4.
inline CitationGraph two_cliques_bridge() {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t base : {0u, 4u}) {
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = i + 1; j < 4; ++j) e.emplace_back(base + i, base + j);
        }
    }
    e.emplace_back(3, 4);
    return graph_from_pairs(8, e, false);
}

// Writes a random citation snapshot: paper i may cite any paper j < i.
inline void write_random_snapshot(const std::filesystem::path& dir, std::size_t n, double p, std::mt19937_64& rng) {
    std::string nodes = "id\ttitle\tyear\tdoi\n";
    std::string edges = "citing_id\tcited_id\n";
    for (std::size_t i = 0; i < n; ++i) {
        nodes += node_name(i) + "\tPaper number " + std::to_string(i) + " on urban systems\t" +
                 std::to_string(1950 + i % 70) + "\t10.1/" + std::to_string(i) + "\n";
        for (std::size_t j = 0; j < i; ++j) {
            if (uniform01(rng) < p) edges += node_name(i) + "\t" + node_name(j) + "\n";
        }
    }
    write_file(dir / "nodes.tsv", nodes);
    write_file(dir / "edges.tsv", edges);
}

// Local HTTP citation index serving a snapshot. Requests arriving closer
// together than min_spacing get a 429. Arrival times are recorded.
class FixtureServer {
public:
    FixtureServer(const std::filesystem::path& snapshot_dir, double max_rate_per_sec, std::string api_key = {})
        : snapshot_(Snapshot::load(snapshot_dir)), api_key_(std::move(api_key)) {
        min_spacing_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(0.9 / max_rate_per_sec));
        server_.Get(R"(/citers/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            if (!admit(req, res)) return;
            const std::string id = req.matches[1];
            if (!snapshot_.find(id)) {
                res.status = 404;
                return;
            }
            const auto& all = snapshot_.citers_of(id);
            std::size_t offset = 0;
            if (req.has_param("cursor") && !req.get_param_value("cursor").empty()) {
                offset = std::stoul(req.get_param_value("cursor"));
            }
            const std::size_t size = std::stoul(req.get_param_value("page_size"));
            const std::size_t end = std::min(all.size(), offset + size);
            nlohmann::json body;
            body["citers"] = nlohmann::json::array();
            for (std::size_t i = offset; i < end; ++i) body["citers"].push_back(to_json(snapshot_.paper(all[i])));
            body["next_cursor"] = end < all.size() ? nlohmann::json(std::to_string(end)) : nlohmann::json(nullptr);
            body["complete"] = end >= all.size();
            res.set_content(body.dump(), "application/json");
        });
        server_.Get("/resolve", [this](const httplib::Request& req, httplib::Response& res) {
            if (!admit(req, res)) return;
            ReferenceRecord r;
            r.raw_key = "q";
            r.title = req.get_param_value("title");
            if (!req.get_param_value("year").empty()) r.year = std::stoi(req.get_param_value("year"));
            if (!req.get_param_value("doi").empty()) r.doi = req.get_param_value("doi");
            if (r.title.empty() && !r.doi) {
                res.status = 400;
                return;
            }
            if (r.title.empty()) r.title = "-";
            auto hit = snapshot_.resolve(r);
            if (!hit) {
                res.status = 404;
                return;
            }
            res.set_content(to_json(*hit).dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FixtureServer() {
        server_.stop();
        thread_.join();
    }

    int port() const { return port_; }
    std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::string citers_template() const { return base() + "/citers/{id}?cursor={cursor}&page_size={page_size}"; }
    std::string resolve_template() const { return base() + "/resolve?doi={doi}&title={title}&year={year}"; }

    // Force the next n requests to fail with this status.
    void fail_next(int n, int status) {
        std::lock_guard lock(mutex_);
        fail_remaining_ = n;
        fail_status_ = status;
    }

    std::vector<std::chrono::steady_clock::time_point> arrivals() const {
        std::lock_guard lock(mutex_);
        return arrivals_;
    }
    std::size_t rejected() const {
        std::lock_guard lock(mutex_);
        return rejected_;
    }
    std::size_t requests() const {
        std::lock_guard lock(mutex_);
        return arrivals_.size();
    }

private:
    bool admit(const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(mutex_);
        const auto now = std::chrono::steady_clock::now();
        arrivals_.push_back(now);
        if (!api_key_.empty() && req.get_header_value("X-API-Key") != api_key_) {
            res.status = 401;
            return false;
        }
        if (fail_remaining_ > 0) {
            --fail_remaining_;
            res.status = fail_status_;
            return false;
        }
        if (last_admitted_ && now - *last_admitted_ < min_spacing_) {
            ++rejected_;
            res.status = 429;
            return false;
        }
        last_admitted_ = now;
        return true;
    }

    Snapshot snapshot_;
    std::string api_key_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::chrono::steady_clock::duration min_spacing_{};
    mutable std::mutex mutex_;
    std::vector<std::chrono::steady_clock::time_point> arrivals_;
    std::optional<std::chrono::steady_clock::time_point> last_admitted_;
    std::size_t rejected_ = 0;
    int fail_remaining_ = 0;
    int fail_status_ = 503;
};

// Largest number of arrivals inside any window of the given length.
inline std::size_t max_in_window(std::vector<std::chrono::steady_clock::time_point> t,
                                 std::chrono::steady_clock::duration window) {
    std::sort(t.begin(), t.end());
    std::size_t best = 0, lo = 0;
    for (std::size_t hi = 0; hi < t.size(); ++hi) {
        while (t[hi] - t[lo] >= window) ++lo;
        best = std::max(best, hi - lo + 1);
    }
    return best;
}

inline ProviderConfig remote_config(const FixtureServer& server, double rate, int page_size) {
    ProviderConfig c;
    c.mode = ProviderMode::remote;
    c.endpoint_url = server.citers_template();
    c.resolve_url = server.resolve_template();
    c.rate_limit_per_sec = rate;
    c.page_size = page_size;
    c.max_retries = 3;
    c.backoff_initial = std::chrono::milliseconds(5);
    c.timeout = std::chrono::milliseconds(5000);
    return c;
}

}  // namespace cs_test
