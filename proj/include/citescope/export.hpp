#pragma once

#include <filesystem>
#include <string>

#include "citescope/community.hpp"
#include "citescope/graph.hpp"

namespace citescope {

enum class ExportFormat { graphml, edgelist };

ExportFormat export_format_from_string(const std::string& s);

// GraphML with node attributes title, depth and community. Nodes and edges
// come out in the graph's sorted order. Throws DataError if the partition
// is empty or misses a node of g.
std::string to_graphml(const CitationGraph& g, const Partition& p, const std::string& config_hash = {});

// Snapshot edges.tsv layout (citing_id, cited_id).
std::string to_edgelist(const CitationGraph& g, const Partition& p, const std::string& config_hash = {});

void export_graph(const CitationGraph& g, const Partition& p, ExportFormat format, const std::filesystem::path& out,
                  const std::string& config_hash = {});

}  // namespace citescope
