#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace citescope {

using NodeIndex = std::uint32_t;

struct NodeInfo {
    std::string id;
    std::optional<std::string> title;
    std::optional<int> year;
    int depth = 0;               // crawl level, 0 = seed
    bool fully_resolved = false; // every citer of this node was retrieved

    bool operator==(const NodeInfo&) const = default;
};

// Labeled set of paper ids, kept sorted and unique.
struct NodeSet {
    std::string label;
    std::vector<std::string> members;

    NodeSet() = default;
    NodeSet(std::string label, std::vector<std::string> members);

    bool contains(std::string_view id) const;
    std::size_t size() const { return members.size(); }
    bool empty() const { return members.empty(); }
    bool operator==(const NodeSet&) const = default;
};

// Directed citation graph (u -> v: u cites v) or its undirected
// symmetrization. Nodes are indexed in ascending id order; edges are simple,
// free of self-loops, and sorted. Undirected edges are stored as (u, v) with
// u < v. Immutable once built, so concurrent readers are safe.
class CitationGraph {
public:
    using Edge = std::pair<NodeIndex, NodeIndex>;

    CitationGraph() = default;

    // nodes must be sorted by id with unique ids; edges must satisfy the
    // class invariants for the given directedness. weights is empty
    // (all 1) or parallel to edges.
    CitationGraph(std::vector<NodeInfo> nodes, std::vector<Edge> edges, bool directed,
                  std::vector<double> weights = {});

    bool directed() const { return directed_; }
    bool weighted() const { return !weights_.empty(); }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    bool empty() const { return nodes_.empty(); }

    const NodeInfo& node(NodeIndex v) const { return nodes_[v]; }
    const std::vector<NodeInfo>& nodes() const { return nodes_; }
    std::optional<NodeIndex> find(std::string_view id) const;

    std::span<const Edge> edges() const { return edges_; }
    double weight(std::size_t edge) const { return weights_.empty() ? 1.0 : weights_[edge]; }
    std::span<const double> weights() const { return weights_; }

    // Directed: cited papers / citing papers. Undirected: both return the
    // neighbor list.
    std::span<const NodeIndex> out_neighbors(NodeIndex v) const;
    std::span<const NodeIndex> in_neighbors(NodeIndex v) const;
    // Edge positions parallel to out_neighbors / in_neighbors.
    std::span<const std::uint32_t> out_edge_ids(NodeIndex v) const;

    std::size_t out_degree(NodeIndex v) const { return out_offsets_[v + 1] - out_offsets_[v]; }
    std::size_t in_degree(NodeIndex v) const;
    // in + out for directed graphs, neighbor count for undirected ones.
    std::size_t degree(NodeIndex v) const;

    bool has_edge(NodeIndex from, NodeIndex to) const;

    std::vector<std::string> node_ids() const;

    bool operator==(const CitationGraph& other) const;

private:
    std::vector<NodeInfo> nodes_;
    std::vector<Edge> edges_;
    std::vector<double> weights_;
    bool directed_ = true;
    std::vector<std::size_t> out_offsets_{0};
    std::vector<NodeIndex> out_targets_;
    std::vector<std::uint32_t> out_edge_ids_;
    std::vector<std::size_t> in_offsets_{0};
    std::vector<NodeIndex> in_sources_;
};

// Accumulates nodes and edges by id, then sorts and deduplicates.
// Self-loops are dropped on ingestion.
class GraphBuilder {
public:
    explicit GraphBuilder(bool directed = true) : directed_(directed) {}

    // Adds the node if absent; returns the stored record either way.
    NodeInfo& add_node(NodeInfo info);
    bool has_node(std::string_view id) const;
    NodeInfo* find_node(std::string_view id);

    // Both endpoints must already exist. Returns false for a dropped
    // self-loop.
    bool add_edge(std::string_view from, std::string_view to);

    std::size_t node_count() const { return nodes_.size(); }

    CitationGraph build() &&;

private:
    bool directed_;
    std::vector<NodeInfo> nodes_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges_;
};

// Share of nodes with positive in-degree whose citers were all retrieved;
// 1.0 when no node has a citer. Throws DataError on an empty graph.
double completeness_fraction(const CitationGraph& g);

// Induced subgraph on the largest weakly connected component. Ties go to
// the component holding the smallest node id.
CitationGraph largest_weak_component(const CitationGraph& g);

// Repeatedly removes every node of total degree <= 1.
CitationGraph prune_degree_one(const CitationGraph& g);

// Undirected simple graph with {u, v} iff u -> v or v -> u. With weighted,
// reciprocal pairs get weight 2.
CitationGraph symmetrize(const CitationGraph& g, bool weighted = false);

// Seeds plus everything reachable by walking from cited to citing papers.
NodeSet chapter_subnetwork(const CitationGraph& g, const NodeSet& seeds);

CitationGraph induced_subgraph(const CitationGraph& g, const NodeSet& nodes);
CitationGraph induced_subgraph(const CitationGraph& g, const std::vector<bool>& keep);

NodeSet all_nodes(const CitationGraph& g, std::string label = {});

// Snapshot-format persistence: nodes.tsv (id, title, year, depth,
// fully_resolved) and edges.tsv (citing_id, cited_id). The header comment,
// if non-empty, is written as a leading "# ..." line.
void write_graph(const CitationGraph& g, const std::filesystem::path& dir, const std::string& header_comment = {});
CitationGraph read_graph(const std::filesystem::path& dir);

// Undirected edge list: source, target[, weight].
void write_undirected(const CitationGraph& g, const std::filesystem::path& path,
                      const std::string& header_comment = {});
CitationGraph read_undirected(const std::filesystem::path& path, const CitationGraph& node_source);

}  // namespace citescope
