#include "citescope/export.hpp"

#include "citescope/error.hpp"
#include "citescope/text.hpp"
#include "citescope/tsv.hpp"

namespace citescope {

ExportFormat export_format_from_string(const std::string& s) {
    if (s == "graphml") return ExportFormat::graphml;
    if (s == "edgelist") return ExportFormat::edgelist;
    throw UsageError("export format must be graphml or edgelist, got '" + s + "'");
}

namespace {

std::vector<CommunityLabel> checked_labels(const CitationGraph& g, const Partition& p) {
    if (p.empty()) throw DataError("export: partition is empty");
    return p.aligned_to(g);
}

}  // namespace

std::string to_graphml(const CitationGraph& g, const Partition& p, const std::string& config_hash) {
    const auto labels = checked_labels(g, p);
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (!config_hash.empty()) out += "<!-- config_hash: " + config_hash + " -->\n";
    out += "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
    out += "  <key id=\"title\" for=\"node\" attr.name=\"title\" attr.type=\"string\"/>\n";
    out += "  <key id=\"depth\" for=\"node\" attr.name=\"depth\" attr.type=\"int\"/>\n";
    out += "  <key id=\"community\" for=\"node\" attr.name=\"community\" attr.type=\"int\"/>\n";
    out += std::string("  <graph id=\"G\" edgedefault=\"") + (g.directed() ? "directed" : "undirected") + "\">\n";
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
        const auto& n = g.node(v);
        out += "    <node id=\"" + text::xml_escape(n.id) + "\">\n";
        out += "      <data key=\"title\">" + text::xml_escape(n.title.value_or("")) + "</data>\n";
        out += "      <data key=\"depth\">" + std::to_string(n.depth) + "</data>\n";
        out += "      <data key=\"community\">" + std::to_string(labels[v]) + "</data>\n";
        out += "    </node>\n";
    }
    std::size_t e = 0;
    for (const auto& [u, v] : g.edges()) {
        out += "    <edge id=\"e" + std::to_string(e++) + "\" source=\"" + text::xml_escape(g.node(u).id) +
               "\" target=\"" + text::xml_escape(g.node(v).id) + "\"/>\n";
    }
    out += "  </graph>\n</graphml>\n";
    return out;
}

std::string to_edgelist(const CitationGraph& g, const Partition& p, const std::string& config_hash) {
    checked_labels(g, p);
    std::string out;
    if (!config_hash.empty()) out += "# config_hash: " + config_hash + "\n";
    out += "citing_id\tcited_id\n";
    for (const auto& [u, v] : g.edges()) out += g.node(u).id + "\t" + g.node(v).id + "\n";
    return out;
}

void export_graph(const CitationGraph& g, const Partition& p, ExportFormat format, const std::filesystem::path& out,
                  const std::string& config_hash) {
    write_file(out, format == ExportFormat::graphml ? to_graphml(g, p, config_hash) : to_edgelist(g, p, config_hash));
}

}  // namespace citescope
