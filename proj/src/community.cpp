#include "citescope/community.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "citescope/error.hpp"
#include "citescope/text.hpp"
#include "citescope/tsv.hpp"

namespace citescope {

// ---------------------------------------------------------------------------
// Partition

std::size_t Partition::community_count() const {
    if (labels.empty()) return 0;
    return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

std::vector<std::size_t> Partition::community_sizes() const {
    std::vector<std::size_t> sizes(community_count(), 0);
    for (auto l : labels) ++sizes[l];
    return sizes;
}

std::optional<CommunityLabel> Partition::label_of(std::string_view id) const {
    auto it = std::lower_bound(node_ids.begin(), node_ids.end(), id,
                               [](const std::string& a, std::string_view b) { return std::string_view(a) < b; });
    if (it == node_ids.end() || *it != id) return std::nullopt;
    return labels[static_cast<std::size_t>(it - node_ids.begin())];
}

std::vector<std::string> Partition::members(CommunityLabel label) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) out.push_back(node_ids[i]);
    }
    return out;
}

std::vector<CommunityLabel> Partition::aligned_to(const CitationGraph& g) const {
    std::vector<CommunityLabel> out(g.node_count());
    std::size_t j = 0;
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
        const auto& id = g.node(v).id;
        while (j < node_ids.size() && node_ids[j] < id) ++j;
        if (j == node_ids.size() || node_ids[j] != id) {
            throw DataError("partition does not cover node '" + id + "'");
        }
        out[v] = labels[j];
    }
    return out;
}

Partition make_partition(const CitationGraph& g, const std::vector<std::uint32_t>& raw_labels, std::uint64_t rng_seed,
                         double resolution) {
    if (raw_labels.size() != g.node_count()) throw DataError("make_partition: label count mismatch");
    // Raw label -> (size, first index); nodes are in id order.
    std::vector<std::uint32_t> distinct(raw_labels);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    auto slot = [&](std::uint32_t raw) {
        return static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), raw) - distinct.begin());
    };
    std::vector<std::size_t> size(distinct.size(), 0), first(distinct.size(), g.node_count());
    for (std::size_t v = 0; v < raw_labels.size(); ++v) {
        const auto s = slot(raw_labels[v]);
        ++size[s];
        first[s] = std::min(first[s], v);
    }
    std::vector<std::size_t> order(distinct.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (size[a] != size[b]) return size[a] > size[b];
        return first[a] < first[b];
    });
    std::vector<CommunityLabel> canonical(distinct.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) canonical[order[rank]] = static_cast<CommunityLabel>(rank);

    Partition p;
    p.rng_seed = rng_seed;
    p.resolution = resolution;
    p.node_ids = g.node_ids();
    p.labels.resize(raw_labels.size());
    for (std::size_t v = 0; v < raw_labels.size(); ++v) p.labels[v] = canonical[slot(raw_labels[v])];
    return p;
}

// ---------------------------------------------------------------------------
// Louvain

namespace {

// Weighted undirected graph for one aggregation level. Self-loop weights
// are kept apart from the neighbor lists.
struct LevelGraph {
    std::vector<std::size_t> offsets{0};
    std::vector<std::uint32_t> neighbors;
    std::vector<double> weights;
    std::vector<double> self_loops;
    std::vector<double> strength;
    double total_strength = 0.0;  // 2m

    std::size_t size() const { return self_loops.size(); }
};

LevelGraph level_from(const CitationGraph& g) {
    LevelGraph lg;
    const std::size_t n = g.node_count();
    lg.offsets.assign(n + 1, 0);
    lg.self_loops.assign(n, 0.0);
    lg.strength.assign(n, 0.0);
    lg.neighbors.reserve(2 * g.edge_count());
    lg.weights.reserve(2 * g.edge_count());
    for (NodeIndex v = 0; v < n; ++v) {
        const auto nbrs = g.out_neighbors(v);
        const auto eids = g.out_edge_ids(v);
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            const double w = g.weight(eids[i]);
            lg.neighbors.push_back(nbrs[i]);
            lg.weights.push_back(w);
            lg.strength[v] += w;
        }
        lg.offsets[v + 1] = lg.neighbors.size();
        lg.total_strength += lg.strength[v];
    }
    return lg;
}

LevelGraph aggregate(const LevelGraph& lg, const std::vector<std::uint32_t>& comm, std::size_t n_comm) {
    LevelGraph out;
    out.self_loops.assign(n_comm, 0.0);
    out.strength.assign(n_comm, 0.0);
    out.offsets.assign(n_comm + 1, 0);
    std::vector<std::vector<std::uint32_t>> members(n_comm);
    for (std::uint32_t v = 0; v < lg.size(); ++v) {
        members[comm[v]].push_back(v);
        out.self_loops[comm[v]] += lg.self_loops[v];
        out.strength[comm[v]] += lg.strength[v];
    }
    std::vector<double> acc(n_comm, 0.0);
    std::vector<std::uint32_t> touched;
    for (std::uint32_t c = 0; c < n_comm; ++c) {
        for (auto v : members[c]) {
            for (auto i = lg.offsets[v]; i < lg.offsets[v + 1]; ++i) {
                const auto d = comm[lg.neighbors[i]];
                if (d == c) {
                    // Each internal edge is seen from both ends.
                    out.self_loops[c] += 0.5 * lg.weights[i];
                    continue;
                }
                if (acc[d] == 0.0) touched.push_back(d);
                acc[d] += lg.weights[i];
            }
        }
        std::sort(touched.begin(), touched.end());
        for (auto d : touched) {
            out.neighbors.push_back(d);
            out.weights.push_back(acc[d]);
            acc[d] = 0.0;
        }
        touched.clear();
        out.offsets[c + 1] = out.neighbors.size();
    }
    out.total_strength = lg.total_strength;
    return out;
}

// One level of local moving. Returns per-node community ids (dense) and
// whether any node moved.
std::pair<std::vector<std::uint32_t>, bool> local_moving(const LevelGraph& lg, const LouvainOptions& opt,
                                                         std::mt19937_64& rng) {
    const std::size_t n = lg.size();
    std::vector<std::uint32_t> comm(n);
    std::iota(comm.begin(), comm.end(), 0u);
    std::vector<double> tot(lg.strength);
    const double m2 = lg.total_strength;
    const double gamma = opt.resolution;

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::vector<double> w_to(n, 0.0);
    std::vector<char> is_touched(n, 0);
    std::vector<std::uint32_t> touched;
    bool any_move = false;

    for (int pass = 0; pass < opt.max_passes; ++pass) {
        for (std::size_t i = n; i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_below(rng, i));
            std::swap(order[i - 1], order[j]);
        }
        double pass_gain = 0.0;
        std::size_t moves = 0;
        for (auto v : order) {
            const auto current = comm[v];
            const double k = lg.strength[v];
            touched.clear();
            is_touched[current] = 1;
            touched.push_back(current);
            for (auto e = lg.offsets[v]; e < lg.offsets[v + 1]; ++e) {
                const auto c = comm[lg.neighbors[e]];
                if (!is_touched[c]) {
                    is_touched[c] = 1;
                    touched.push_back(c);
                }
                w_to[c] += lg.weights[e];
            }
            tot[current] -= k;
            // Gain of joining c, up to the common factor 2/2m.
            auto gain = [&](std::uint32_t c) { return w_to[c] - gamma * tot[c] * k / m2; };
            const double stay = gain(current);
            auto best = current;
            double best_gain = stay;
            const double eps = 1e-12 * std::max(1.0, std::abs(stay));
            for (auto c : touched) {
                if (c == current) continue;
                const double g = gain(c);
                if (g > best_gain + eps) {
                    best_gain = g;
                    best = c;
                }
            }
            tot[best] += k;
            comm[v] = best;
            if (best != current) {
                ++moves;
                pass_gain += 2.0 * (best_gain - stay) / m2;
            }
            for (auto c : touched) {
                w_to[c] = 0.0;
                is_touched[c] = 0;
            }
        }
        if (moves > 0) any_move = true;
        if (moves == 0 || pass_gain < opt.min_gain) break;
    }

    // Dense renumbering in order of first appearance.
    std::vector<std::uint32_t> dense(n, ~0u);
    std::uint32_t next = 0;
    for (auto& c : comm) {
        if (dense[c] == ~0u) dense[c] = next++;
        c = dense[c];
    }
    return {std::move(comm), any_move};
}

}  // namespace

Partition louvain(const CitationGraph& g, const LouvainOptions& options) {
    if (g.directed()) throw DataError("louvain requires an undirected graph; symmetrize first");
    if (!(options.resolution > 0)) throw UsageError("louvain resolution must be > 0");
    if (g.empty()) throw DataError("louvain: empty graph");

    const std::size_t n = g.node_count();
    std::vector<std::uint32_t> assignment(n);
    std::iota(assignment.begin(), assignment.end(), 0u);
    LevelGraph level = level_from(g);
    if (level.total_strength <= 0.0) return make_partition(g, assignment, options.rng_seed, options.resolution);

    std::mt19937_64 rng(options.rng_seed);
    for (int depth = 0; depth < options.max_levels; ++depth) {
        auto [comm, moved] = local_moving(level, options, rng);
        if (!moved) break;
        const std::size_t n_comm = *std::max_element(comm.begin(), comm.end()) + 1;
        for (auto& a : assignment) a = comm[a];
        if (n_comm == level.size()) break;
        level = aggregate(level, comm, n_comm);
    }
    return make_partition(g, assignment, options.rng_seed, options.resolution);
}

// ---------------------------------------------------------------------------
// Modularity

double modularity_undirected(const CitationGraph& g, const std::vector<CommunityLabel>& labels, double resolution) {
    if (labels.size() != g.node_count()) throw DataError("modularity: label count mismatch");
    double m = 0.0;
    const auto edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) m += g.weight(e);
    if (m <= 0.0) throw DataError("modularity undefined on empty graph");
    const std::size_t k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<double> internal(k, 0.0), degree(k, 0.0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [u, v] = edges[e];
        const double w = g.weight(e);
        degree[labels[u]] += w;
        degree[labels[v]] += w;
        if (labels[u] == labels[v]) internal[labels[u]] += w;
    }
    double q = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double share = degree[c] / (2.0 * m);
        q += internal[c] / m - resolution * share * share;
    }
    return q;
}

double modularity_undirected(const CitationGraph& g, const Partition& p, double resolution) {
    if (g.directed()) return modularity_undirected(symmetrize(g), p, resolution);
    return modularity_undirected(g, p.aligned_to(g), resolution);
}

double modularity_directed(const CitationGraph& g, const std::vector<CommunityLabel>& labels) {
    if (!g.directed()) throw DataError("modularity_directed requires a directed graph");
    if (labels.size() != g.node_count()) throw DataError("modularity: label count mismatch");
    const double m = static_cast<double>(g.edge_count());
    if (m <= 0.0) throw DataError("modularity undefined on empty graph");
    const std::size_t k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<double> internal(k, 0.0), out_deg(k, 0.0), in_deg(k, 0.0);
    for (const auto& [u, v] : g.edges()) {
        out_deg[labels[u]] += 1.0;
        in_deg[labels[v]] += 1.0;
        if (labels[u] == labels[v]) internal[labels[u]] += 1.0;
    }
    double q = 0.0;
    for (std::size_t c = 0; c < k; ++c) q += internal[c] / m - (out_deg[c] * in_deg[c]) / (m * m);
    return q;
}

double modularity_directed(const CitationGraph& g, const Partition& p) {
    return modularity_directed(g, p.aligned_to(g));
}

// ---------------------------------------------------------------------------
// Sub-communities and summaries

SubCommunityResult sub_communities(const CitationGraph& g, const Partition& p, CommunityLabel label,
                                   const LouvainOptions& options) {
    if (label >= p.community_count()) throw DataError("unknown community label " + std::to_string(label));
    const CitationGraph undirected = g.directed() ? symmetrize(g) : g;
    const auto labels = p.aligned_to(undirected);
    std::vector<bool> keep(undirected.node_count());
    for (std::size_t v = 0; v < keep.size(); ++v) keep[v] = labels[v] == label;
    const auto sub = induced_subgraph(undirected, keep);
    if (sub.empty()) throw DataError("community " + std::to_string(label) + " has no node in the graph");

    SubCommunityResult result;
    result.label = label;
    result.partition = louvain(sub, options);
    if (sub.edge_count() > 0) result.modularity = modularity_undirected(sub, result.partition, options.resolution);
    return result;
}

std::vector<CommunitySummary> community_size_distribution(const CitationGraph& g, const Partition& p,
                                                          std::size_t top_k) {
    if (p.empty()) throw DataError("community_size_distribution: empty partition");
    const auto sizes = p.community_sizes();
    const double total = static_cast<double>(p.size());
    std::vector<CommunitySummary> out(sizes.size());
    for (CommunityLabel c = 0; c < sizes.size(); ++c) {
        out[c].label = c;
        out[c].size = sizes[c];
        out[c].relative_size = static_cast<double>(sizes[c]) / total;
    }
    // Top members by degree; ids not in g count as degree 0.
    std::vector<std::vector<std::pair<std::string, std::size_t>>> ranked(sizes.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto v = g.find(p.node_ids[i]);
        ranked[p.labels[i]].emplace_back(p.node_ids[i], v ? g.degree(*v) : 0);
    }
    for (CommunityLabel c = 0; c < sizes.size(); ++c) {
        auto& r = ranked[c];
        std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (r.size() > top_k) r.resize(top_k);
        out[c].top_degree_members = std::move(r);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size > b.size; });
    return out;
}

std::vector<CommunityLabel> main_communities(const Partition& p, double threshold) {
    const auto sizes = p.community_sizes();
    const double total = static_cast<double>(p.size());
    // Canonical labels are ordered by size, so the highest label is the smallest.
    std::size_t dropped_nodes = 0;
    std::size_t keep = sizes.size();
    while (keep > 0) {
        const std::size_t candidate = dropped_nodes + sizes[keep - 1];
        if (static_cast<double>(candidate) / total >= threshold) break;
        dropped_nodes = candidate;
        --keep;
    }
    std::vector<CommunityLabel> out(keep);
    std::iota(out.begin(), out.end(), 0u);
    return out;
}

nlohmann::json summaries_to_json(const std::vector<CommunitySummary>& summaries, const CitationGraph& g) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : summaries) {
        nlohmann::json j;
        j["label"] = s.label;
        j["size"] = s.size;
        j["relative_size"] = std::stod(text::fixed(s.relative_size));
        nlohmann::json top = nlohmann::json::array();
        for (const auto& [id, degree] : s.top_degree_members) {
            nlohmann::json m;
            m["id"] = id;
            m["degree"] = degree;
            auto v = g.find(id);
            m["title"] = (v && g.node(*v).title) ? nlohmann::json(*g.node(*v).title) : nlohmann::json(nullptr);
            top.push_back(std::move(m));
        }
        j["top_degree_members"] = std::move(top);
        out.push_back(std::move(j));
    }
    return out;
}

void write_partition(const Partition& p, const std::filesystem::path& path, const std::string& header_comment) {
    std::string out;
    if (!header_comment.empty()) out += "# " + header_comment + "\n";
    out += "node_id\tcommunity_label\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        out += p.node_ids[i];
        out += '\t';
        out += std::to_string(p.labels[i]);
        out += '\n';
    }
    write_file(path, out);
}

Partition read_partition(const std::filesystem::path& path) {
    const auto table = read_tsv(path);
    const auto id_col = table.require_column("node_id");
    const auto label_col = table.require_column("community_label");
    if (table.rows.empty()) throw DataError(path.string() + ": empty partition");
    std::vector<std::pair<std::string, CommunityLabel>> rows;
    rows.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto l = text::parse_int(table.rows[r][label_col]);
        if (!l || *l < 0) throw ParseError(table.source, table.line_numbers[r], "invalid community label");
        rows.emplace_back(table.rows[r][id_col], static_cast<CommunityLabel>(*l));
    }
    std::sort(rows.begin(), rows.end());
    Partition p;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].first == rows[i - 1].first) throw DataError(path.string() + ": duplicate node " + rows[i].first);
        p.node_ids.push_back(rows[i].first);
        p.labels.push_back(rows[i].second);
    }
    std::vector<bool> used(p.community_count(), false);
    for (auto l : p.labels) used[l] = true;
    if (std::find(used.begin(), used.end(), false) != used.end()) {
        throw DataError(path.string() + ": community labels are not contiguous");
    }
    return p;
}

}  // namespace citescope
