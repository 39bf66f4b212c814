#include <algorithm>

#include "citescope/error.hpp"
#include "citescope/graph.hpp"
#include "citescope/text.hpp"
#include "citescope/tsv.hpp"

namespace citescope {

namespace {

std::string comment_line(const std::string& header_comment) {
    if (header_comment.empty()) return {};
    return "# " + header_comment + "\n";
}

}  // namespace

void write_graph(const CitationGraph& g, const std::filesystem::path& dir, const std::string& header_comment) {
    if (!g.directed()) throw DataError("write_graph expects a directed graph");
    std::string nodes = comment_line(header_comment) + "id\ttitle\tyear\tdepth\tfully_resolved\n";
    for (const auto& n : g.nodes()) {
        nodes += n.id;
        nodes += '\t';
        if (n.title) nodes += text::tsv_clean(*n.title);
        nodes += '\t';
        if (n.year) nodes += std::to_string(*n.year);
        nodes += '\t';
        nodes += std::to_string(n.depth);
        nodes += '\t';
        nodes += n.fully_resolved ? "1" : "0";
        nodes += '\n';
    }
    std::string edges = comment_line(header_comment) + "citing_id\tcited_id\n";
    for (auto [u, v] : g.edges()) {
        edges += g.node(u).id;
        edges += '\t';
        edges += g.node(v).id;
        edges += '\n';
    }
    write_file(dir / "nodes.tsv", nodes);
    write_file(dir / "edges.tsv", edges);
}

CitationGraph read_graph(const std::filesystem::path& dir) {
    const auto nodes = read_tsv(dir / "nodes.tsv");
    const auto id_col = nodes.require_column("id");
    const auto title_col = nodes.column("title");
    const auto year_col = nodes.column("year");
    const auto depth_col = nodes.column("depth");
    const auto resolved_col = nodes.column("fully_resolved");
    GraphBuilder builder(true);
    for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
        const auto& row = nodes.rows[r];
        NodeInfo info;
        info.id = row[id_col];
        if (info.id.empty()) throw ParseError(nodes.source, nodes.line_numbers[r], "empty id");
        if (builder.has_node(info.id)) throw ParseError(nodes.source, nodes.line_numbers[r], "duplicate id");
        if (title_col && !row[*title_col].empty()) info.title = row[*title_col];
        if (year_col && !row[*year_col].empty()) info.year = text::parse_int(row[*year_col]);
        if (depth_col) {
            auto d = text::parse_int(row[*depth_col]);
            if (!d || *d < 0 || *d > 2) throw ParseError(nodes.source, nodes.line_numbers[r], "depth must be 0, 1 or 2");
            info.depth = *d;
        }
        if (resolved_col) info.fully_resolved = row[*resolved_col] == "1";
        builder.add_node(std::move(info));
    }
    const auto edges = read_tsv(dir / "edges.tsv");
    const auto citing_col = edges.require_column("citing_id");
    const auto cited_col = edges.require_column("cited_id");
    for (std::size_t r = 0; r < edges.rows.size(); ++r) {
        const auto& from = edges.rows[r][citing_col];
        const auto& to = edges.rows[r][cited_col];
        if (!builder.has_node(from) || !builder.has_node(to)) {
            throw ParseError(edges.source, edges.line_numbers[r], "edge endpoint not in nodes.tsv");
        }
        builder.add_edge(from, to);
    }
    return std::move(builder).build();
}

void write_undirected(const CitationGraph& g, const std::filesystem::path& path, const std::string& header_comment) {
    if (g.directed()) throw DataError("write_undirected expects an undirected graph");
    std::string out = comment_line(header_comment);
    out += g.weighted() ? "source\ttarget\tweight\n" : "source\ttarget\n";
    const auto edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        out += g.node(edges[e].first).id;
        out += '\t';
        out += g.node(edges[e].second).id;
        if (g.weighted()) {
            out += '\t';
            out += text::fixed(g.weight(e), 1);
        }
        out += '\n';
    }
    write_file(path, out);
}

CitationGraph read_undirected(const std::filesystem::path& path, const CitationGraph& node_source) {
    const auto table = read_tsv(path);
    const auto s = table.require_column("source");
    const auto t = table.require_column("target");
    const auto w = table.column("weight");
    std::vector<std::pair<CitationGraph::Edge, double>> edges;
    edges.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto u = node_source.find(table.rows[r][s]);
        auto v = node_source.find(table.rows[r][t]);
        if (!u || !v) throw ParseError(table.source, table.line_numbers[r], "edge endpoint not in graph");
        if (*u == *v) continue;
        double weight = w ? std::strtod(table.rows[r][*w].c_str(), nullptr) : 1.0;
        edges.push_back({{std::min(*u, *v), std::max(*u, *v)}, weight});
    }
    std::sort(edges.begin(), edges.end());
    std::vector<CitationGraph::Edge> unique;
    std::vector<double> weights;
    for (const auto& [e, weight] : edges) {
        if (!unique.empty() && unique.back() == e) continue;
        unique.push_back(e);
        if (w) weights.push_back(weight);
    }
    return CitationGraph(node_source.nodes(), std::move(unique), false, std::move(weights));
}

}  // namespace citescope
