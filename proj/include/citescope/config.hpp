#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "citescope/metrics.hpp"
#include "citescope/provider.hpp"

namespace citescope {

// Every analysis parameter of a run. Defaults: depth 2, resolution 1,
// 1% main-community threshold.
struct PipelineConfig {
    std::filesystem::path seed_path;
    std::filesystem::path exclusions_path;
    std::filesystem::path output_dir = "citescope-out";
    ProviderConfig provider;
    int depth = 2;
    std::optional<std::int64_t> budget;
    int workers = 4;
    double resolution = 1.0;
    std::uint64_t rng_seed = 0;
    double main_community_threshold = 0.01;
    CompositionLevel composition_level = CompositionLevel::first_level_only;
    bool weighted_symmetrize = false;
    SimilarityForm similarity = SimilarityForm::dice;
    StdMode std_mode = StdMode::population;
    int inter_citation_top = 5;
    int top_members = 5;
    bool plot_data = false;

    void validate() const;

    // Canonical "key=value" lines of every result-affecting parameter plus
    // checksums of the input files; paths themselves are left out so a
    // moved project keeps its hash.
    std::string canonical_text() const;
    std::string hash() const;
};

// TOML subset: top-level `key = value` pairs and a [provider] table.
// Values are quoted strings, integers, floats or booleans; '#' starts a
// comment. Relative paths resolve against base_dir. Unknown keys are
// rejected with UsageError.
PipelineConfig parse_config(std::string_view document, const std::filesystem::path& base_dir,
                            const std::string& source_name = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace citescope
