#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "citescope/config.hpp"

namespace citescope {

enum class Stage { ingest, crawl, component, core, symmetrize, louvain, subcommunities, metrics, export_graph };

inline constexpr Stage all_stages[] = {Stage::ingest,     Stage::crawl,   Stage::component,
                                       Stage::core,       Stage::symmetrize, Stage::louvain,
                                       Stage::subcommunities, Stage::metrics, Stage::export_graph};

std::string to_string(Stage stage);
Stage stage_from_string(const std::string& s);

struct StageRecord {
    bool completed = false;
    std::string completed_at;
    // Output-directory-relative path -> sha256.
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
};

struct RunManifest {
    std::string tool_version;
    std::string config_hash;
    std::map<std::string, StageRecord> stages;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

struct PipelineOptions {
    // Ignore a config-hash mismatch with an existing manifest.
    bool force = false;
};

struct StageOutcome {
    Stage stage;
    bool skipped = false;  // inputs and outputs unchanged since last run
};

struct PipelineResult {
    RunManifest manifest;
    std::vector<StageOutcome> outcomes;
};

// Runs the requested stages in pipeline order inside config.output_dir.
// A stage whose recorded inputs and outputs still match on disk is skipped.
// Throws UsageError naming the stage to run first when an input artifact is
// missing, and when the stored config hash differs (unless force).
PipelineResult run_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages,
                            const PipelineOptions& options = {});

std::filesystem::path manifest_path(const std::filesystem::path& output_dir);
std::optional<RunManifest> read_manifest(const std::filesystem::path& output_dir);

}  // namespace citescope
