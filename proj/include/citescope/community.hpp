#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "citescope/graph.hpp"

namespace citescope {

using CommunityLabel = std::uint32_t;

// Community label per paper. node_ids is sorted and labels run 0..k-1,
// numbered by descending community size (ties: community holding the
// smaller id first).
struct Partition {
    std::vector<std::string> node_ids;
    std::vector<CommunityLabel> labels;
    std::uint64_t rng_seed = 0;
    double resolution = 1.0;

    std::size_t size() const { return node_ids.size(); }
    bool empty() const { return node_ids.empty(); }
    std::size_t community_count() const;
    std::vector<std::size_t> community_sizes() const;
    std::optional<CommunityLabel> label_of(std::string_view id) const;
    std::vector<std::string> members(CommunityLabel label) const;

    // Labels indexed like g's nodes. Throws DataError if a node of g has no
    // label.
    std::vector<CommunityLabel> aligned_to(const CitationGraph& g) const;

    bool operator==(const Partition&) const = default;
};

// Partition of g's nodes from per-index labels (any integers); relabels to
// the canonical order described on Partition.
Partition make_partition(const CitationGraph& g, const std::vector<std::uint32_t>& raw_labels,
                         std::uint64_t rng_seed = 0, double resolution = 1.0);

struct LouvainOptions {
    double resolution = 1.0;
    std::uint64_t rng_seed = 0;
    // A level stops once a full pass gains less than this much modularity.
    double min_gain = 1e-7;
    int max_levels = 64;
    int max_passes = 1000;
};

// Greedy modularity optimization with seeded node-order shuffling and
// graph aggregation. Moves are accepted only for a strictly positive gain
// over staying put. g must be undirected.
Partition louvain(const CitationGraph& g, const LouvainOptions& options = {});

// Sum over communities of e_c/m - gamma (d_c/2m)^2, using edge weights.
double modularity_undirected(const CitationGraph& g, const Partition& p, double resolution = 1.0);
double modularity_undirected(const CitationGraph& g, const std::vector<CommunityLabel>& labels, double resolution = 1.0);

// Leicht-Newman directed modularity:
// (1/m) sum_ij [A_ij - k_i^out k_j^in / m] delta(c_i, c_j).
double modularity_directed(const CitationGraph& g, const Partition& p);
double modularity_directed(const CitationGraph& g, const std::vector<CommunityLabel>& labels);

struct SubCommunityResult {
    CommunityLabel label = 0;
    Partition partition;
    // Absent when the community has no internal edge.
    std::optional<double> modularity;
};

// Runs louvain inside one community of p (on the undirected view of g).
SubCommunityResult sub_communities(const CitationGraph& g, const Partition& p, CommunityLabel label,
                                   const LouvainOptions& options = {});

struct CommunitySummary {
    CommunityLabel label = 0;
    std::size_t size = 0;
    double relative_size = 0.0;
    std::vector<std::pair<std::string, std::size_t>> top_degree_members;
};

// Summaries sorted by size, largest first. Degrees are taken in g.
std::vector<CommunitySummary> community_size_distribution(const CitationGraph& g, const Partition& p,
                                                          std::size_t top_k = 5);

// Labels of the main communities: dropping the largest group of smallest
// communities whose cumulated relative size stays below threshold.
std::vector<CommunityLabel> main_communities(const Partition& p, double threshold);

nlohmann::json summaries_to_json(const std::vector<CommunitySummary>& summaries, const CitationGraph& g);

void write_partition(const Partition& p, const std::filesystem::path& path, const std::string& header_comment = {});
Partition read_partition(const std::filesystem::path& path);

// Unbiased draw in [0, bound) from a 64-bit engine; stable across
// standard library implementations.
template <typename Engine>
std::uint64_t uniform_below(Engine& rng, std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
        const std::uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

}  // namespace citescope
