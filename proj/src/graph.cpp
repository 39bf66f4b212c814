#include "citescope/graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "citescope/error.hpp"

namespace citescope {

NodeSet::NodeSet(std::string label_, std::vector<std::string> members_)
    : label(std::move(label_)), members(std::move(members_)) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
}

bool NodeSet::contains(std::string_view id) const {
    return std::binary_search(members.begin(), members.end(), id,
                              [](const auto& a, const auto& b) { return std::string_view(a) < std::string_view(b); });
}

// ---------------------------------------------------------------------------
// CitationGraph

CitationGraph::CitationGraph(std::vector<NodeInfo> nodes, std::vector<Edge> edges, bool directed,
                             std::vector<double> weights)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), weights_(std::move(weights)), directed_(directed) {
    if (!weights_.empty() && weights_.size() != edges_.size()) {
        throw DataError("edge weights must be parallel to edges");
    }
    const std::size_t n = nodes_.size();
    out_offsets_.assign(n + 1, 0);
    for (const auto& [u, v] : edges_) {
        ++out_offsets_[u + 1];
        if (!directed_) ++out_offsets_[v + 1];
    }
    std::partial_sum(out_offsets_.begin(), out_offsets_.end(), out_offsets_.begin());
    out_targets_.resize(out_offsets_[n]);
    out_edge_ids_.resize(out_offsets_[n]);
    {
        std::vector<std::size_t> fill(out_offsets_.begin(), out_offsets_.end() - 1);
        for (std::uint32_t e = 0; e < edges_.size(); ++e) {
            const auto [u, v] = edges_[e];
            out_targets_[fill[u]] = v;
            out_edge_ids_[fill[u]++] = e;
            if (!directed_) {
                out_targets_[fill[v]] = u;
                out_edge_ids_[fill[v]++] = e;
            }
        }
    }
    if (!directed_) {
        // Neighbor lists sorted by neighbor index.
        for (std::size_t v = 0; v < n; ++v) {
            const auto b = out_offsets_[v], e = out_offsets_[v + 1];
            std::vector<std::pair<NodeIndex, std::uint32_t>> tmp;
            tmp.reserve(e - b);
            for (auto i = b; i < e; ++i) tmp.emplace_back(out_targets_[i], out_edge_ids_[i]);
            std::sort(tmp.begin(), tmp.end());
            for (auto i = b; i < e; ++i) {
                out_targets_[i] = tmp[i - b].first;
                out_edge_ids_[i] = tmp[i - b].second;
            }
        }
        return;
    }
    in_offsets_.assign(n + 1, 0);
    for (const auto& [u, v] : edges_) ++in_offsets_[v + 1];
    std::partial_sum(in_offsets_.begin(), in_offsets_.end(), in_offsets_.begin());
    in_sources_.resize(in_offsets_[n]);
    std::vector<std::size_t> fill(in_offsets_.begin(), in_offsets_.end() - 1);
    // Edges are sorted by source, so each in-list comes out sorted.
    for (const auto& [u, v] : edges_) in_sources_[fill[v]++] = u;
}

std::optional<NodeIndex> CitationGraph::find(std::string_view id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                               [](const NodeInfo& n, std::string_view key) { return std::string_view(n.id) < key; });
    if (it == nodes_.end() || it->id != id) return std::nullopt;
    return static_cast<NodeIndex>(it - nodes_.begin());
}

std::span<const NodeIndex> CitationGraph::out_neighbors(NodeIndex v) const {
    return {out_targets_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
}

std::span<const std::uint32_t> CitationGraph::out_edge_ids(NodeIndex v) const {
    return {out_edge_ids_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
}

std::span<const NodeIndex> CitationGraph::in_neighbors(NodeIndex v) const {
    if (!directed_) return out_neighbors(v);
    return {in_sources_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
}

std::size_t CitationGraph::in_degree(NodeIndex v) const {
    if (!directed_) return out_degree(v);
    return in_offsets_[v + 1] - in_offsets_[v];
}

std::size_t CitationGraph::degree(NodeIndex v) const {
    if (!directed_) return out_degree(v);
    return out_degree(v) + in_degree(v);
}

bool CitationGraph::has_edge(NodeIndex from, NodeIndex to) const {
    if (!directed_ && from > to) std::swap(from, to);
    return std::binary_search(edges_.begin(), edges_.end(), Edge{from, to});
}

std::vector<std::string> CitationGraph::node_ids() const {
    std::vector<std::string> ids;
    ids.reserve(nodes_.size());
    for (const auto& n : nodes_) ids.push_back(n.id);
    return ids;
}

bool CitationGraph::operator==(const CitationGraph& other) const {
    return directed_ == other.directed_ && nodes_ == other.nodes_ && edges_ == other.edges_ &&
           weights_ == other.weights_;
}

// ---------------------------------------------------------------------------
// GraphBuilder

NodeInfo& GraphBuilder::add_node(NodeInfo info) {
    auto it = index_.find(info.id);
    if (it != index_.end()) return nodes_[it->second];
    if (info.id.empty()) throw DataError("node id must be non-empty");
    const auto idx = static_cast<std::uint32_t>(nodes_.size());
    index_.emplace(info.id, idx);
    nodes_.push_back(std::move(info));
    return nodes_.back();
}

bool GraphBuilder::has_node(std::string_view id) const { return index_.count(std::string(id)) > 0; }

NodeInfo* GraphBuilder::find_node(std::string_view id) {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

bool GraphBuilder::add_edge(std::string_view from, std::string_view to) {
    auto f = index_.find(std::string(from));
    auto t = index_.find(std::string(to));
    if (f == index_.end() || t == index_.end()) {
        throw DataError("edge endpoint not in graph: " + std::string(from) + " -> " + std::string(to));
    }
    if (f->second == t->second) return false;
    edges_.emplace_back(f->second, t->second);
    return true;
}

CitationGraph GraphBuilder::build() && {
    std::vector<std::uint32_t> order(nodes_.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return nodes_[a].id < nodes_[b].id; });
    std::vector<NodeIndex> remap(nodes_.size());
    std::vector<NodeInfo> sorted;
    sorted.reserve(nodes_.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        remap[order[i]] = static_cast<NodeIndex>(i);
        sorted.push_back(std::move(nodes_[order[i]]));
    }
    std::vector<CitationGraph::Edge> edges;
    edges.reserve(edges_.size());
    for (auto [u, v] : edges_) {
        NodeIndex a = remap[u], b = remap[v];
        if (!directed_ && a > b) std::swap(a, b);
        edges.emplace_back(a, b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    nodes_.clear();
    index_.clear();
    edges_.clear();
    return CitationGraph(std::move(sorted), std::move(edges), directed_);
}

// ---------------------------------------------------------------------------
// Transforms

double completeness_fraction(const CitationGraph& g) {
    if (g.empty()) throw DataError("completeness_fraction: empty graph");
    std::size_t cited = 0, resolved = 0;
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
        if (g.in_degree(v) == 0) continue;
        ++cited;
        if (g.node(v).fully_resolved) ++resolved;
    }
    if (cited == 0) return 1.0;
    return static_cast<double>(resolved) / static_cast<double>(cited);
}

CitationGraph induced_subgraph(const CitationGraph& g, const std::vector<bool>& keep) {
    if (keep.size() != g.node_count()) throw DataError("induced_subgraph: mask size mismatch");
    std::vector<NodeIndex> remap(g.node_count(), 0);
    std::vector<NodeInfo> nodes;
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
        if (!keep[v]) continue;
        remap[v] = static_cast<NodeIndex>(nodes.size());
        nodes.push_back(g.node(v));
    }
    std::vector<CitationGraph::Edge> edges;
    std::vector<double> weights;
    const auto all = g.edges();
    for (std::size_t e = 0; e < all.size(); ++e) {
        const auto [u, v] = all[e];
        if (!keep[u] || !keep[v]) continue;
        edges.emplace_back(remap[u], remap[v]);
        if (g.weighted()) weights.push_back(g.weight(e));
    }
    // Index order is preserved by the remap, so edges stay sorted.
    return CitationGraph(std::move(nodes), std::move(edges), g.directed(), std::move(weights));
}

CitationGraph induced_subgraph(const CitationGraph& g, const NodeSet& nodes) {
    std::vector<bool> keep(g.node_count(), false);
    for (const auto& id : nodes.members) {
        auto v = g.find(id);
        if (!v) throw DataError("induced_subgraph: node '" + id + "' is not in the graph");
        keep[*v] = true;
    }
    return induced_subgraph(g, keep);
}

NodeSet all_nodes(const CitationGraph& g, std::string label) { return NodeSet(std::move(label), g.node_ids()); }

CitationGraph largest_weak_component(const CitationGraph& g) {
    if (g.empty()) throw DataError("largest_weak_component: empty graph");
    const std::size_t n = g.node_count();
    constexpr std::uint32_t unseen = ~0u;
    std::vector<std::uint32_t> component(n, unseen);
    std::uint32_t best = 0;
    std::size_t best_size = 0;
    std::uint32_t next = 0;
    std::vector<NodeIndex> stack;
    // Visiting roots in index (= id) order makes the first component of a
    // given size the one with the smallest id.
    for (NodeIndex root = 0; root < n; ++root) {
        if (component[root] != unseen) continue;
        const std::uint32_t label = next++;
        std::size_t size = 0;
        component[root] = label;
        stack.push_back(root);
        while (!stack.empty()) {
            const NodeIndex v = stack.back();
            stack.pop_back();
            ++size;
            for (NodeIndex w : g.out_neighbors(v)) {
                if (component[w] == unseen) {
                    component[w] = label;
                    stack.push_back(w);
                }
            }
            for (NodeIndex w : g.in_neighbors(v)) {
                if (component[w] == unseen) {
                    component[w] = label;
                    stack.push_back(w);
                }
            }
        }
        if (size > best_size) {
            best_size = size;
            best = label;
        }
    }
    std::vector<bool> keep(n);
    for (std::size_t v = 0; v < n; ++v) keep[v] = component[v] == best;
    return induced_subgraph(g, keep);
}

CitationGraph prune_degree_one(const CitationGraph& g) {
    const std::size_t n = g.node_count();
    std::vector<std::size_t> degree(n);
    std::vector<bool> alive(n, true);
    std::vector<NodeIndex> queue;
    for (NodeIndex v = 0; v < n; ++v) {
        degree[v] = g.degree(v);
        if (degree[v] <= 1) {
            alive[v] = false;
            queue.push_back(v);
        }
    }
    while (!queue.empty()) {
        const NodeIndex v = queue.back();
        queue.pop_back();
        auto drop = [&](NodeIndex w) {
            if (!alive[w]) return;
            if (--degree[w] <= 1) {
                alive[w] = false;
                queue.push_back(w);
            }
        };
        for (NodeIndex w : g.out_neighbors(v)) drop(w);
        if (g.directed()) {
            for (NodeIndex w : g.in_neighbors(v)) drop(w);
        }
    }
    return induced_subgraph(g, alive);
}

CitationGraph symmetrize(const CitationGraph& g, bool weighted) {
    if (!g.directed()) return g;
    std::vector<CitationGraph::Edge> edges;
    edges.reserve(g.edge_count());
    for (auto [u, v] : g.edges()) edges.emplace_back(std::min(u, v), std::max(u, v));
    std::sort(edges.begin(), edges.end());
    std::vector<CitationGraph::Edge> unique;
    std::vector<double> weights;
    unique.reserve(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (!unique.empty() && unique.back() == edges[i]) {
            if (weighted) weights.back() += 1.0;
            continue;
        }
        unique.push_back(edges[i]);
        if (weighted) weights.push_back(1.0);
    }
    return CitationGraph(g.nodes(), std::move(unique), false, std::move(weights));
}

NodeSet chapter_subnetwork(const CitationGraph& g, const NodeSet& seeds) {
    std::vector<bool> reached(g.node_count(), false);
    std::deque<NodeIndex> frontier;
    for (const auto& id : seeds.members) {
        auto v = g.find(id);
        if (!v) throw DataError("chapter_subnetwork: seed '" + id + "' is not in the graph");
        if (!reached[*v]) {
            reached[*v] = true;
            frontier.push_back(*v);
        }
    }
    while (!frontier.empty()) {
        const NodeIndex v = frontier.front();
        frontier.pop_front();
        for (NodeIndex citer : g.in_neighbors(v)) {
            if (!reached[citer]) {
                reached[citer] = true;
                frontier.push_back(citer);
            }
        }
    }
    NodeSet out;
    out.label = seeds.label;
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
        if (reached[v]) out.members.push_back(g.node(v).id);
    }
    return out;
}

}  // namespace citescope
