#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "citescope/community.hpp"
#include "citescope/config.hpp"
#include "citescope/crawl.hpp"
#include "citescope/error.hpp"
#include "citescope/export.hpp"
#include "citescope/graph.hpp"
#include "citescope/pipeline.hpp"
#include "citescope/tsv.hpp"

namespace fs = std::filesystem;
using namespace citescope;

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<std::int64_t> seed;
    bool force = false;
    bool plot_data = false;
};

PipelineConfig load(const GlobalFlags& flags) {
    if (flags.config_path.empty()) throw UsageError("--config is required");
    auto config = load_config(flags.config_path);
    if (flags.seed) {
        if (*flags.seed < 0) throw UsageError("--seed must be >= 0");
        config.rng_seed = static_cast<std::uint64_t>(*flags.seed);
    }
    if (flags.plot_data) config.plot_data = true;
    return config;
}

void run_stages(const GlobalFlags& flags, const std::vector<Stage>& stages) {
    const auto config = load(flags);
    PipelineOptions options;
    options.force = flags.force;
    const auto result = run_pipeline(config, stages, options);
    for (const auto& o : result.outcomes) {
        std::cout << to_string(o.stage) << ": " << (o.skipped ? "up to date" : "done") << "\n";
    }
}

void print_stats(const GlobalFlags& flags) {
    const auto config = load(flags);
    const fs::path dir = config.output_dir;
    const auto stats_path = dir / "network/stats.json";
    if (!fs::exists(stats_path)) throw UsageError("missing " + stats_path.string() + ": run crawl first");
    const auto stats = CrawlStats::from_json(nlohmann::json::parse(read_file(stats_path)));
    std::cout << "seeds resolved:    " << stats.seeds_resolved << "\n"
              << "seeds unresolved:  " << stats.seeds_unresolved << "\n"
              << "nodes by depth:    " << stats.nodes_by_depth[0] << " / " << stats.nodes_by_depth[1] << " / "
              << stats.nodes_by_depth[2] << "\n"
              << "edges:             " << stats.edges << "\n"
              << "requests issued:   " << stats.requests_issued << "\n"
              << "budget exhausted:  " << (stats.budget_exhausted ? "yes" : "no") << "\n"
              << "completeness:      " << stats.completeness << "\n";

    const auto comm_path = dir / "communities.json";
    if (!fs::exists(comm_path)) return;
    const auto comm = nlohmann::json::parse(read_file(comm_path));
    std::cout << "communities:       " << comm.at("community_count") << "\n"
              << "modularity:        " << comm.at("modularity") << "\n"
              << "directed Q:        " << comm.at("directed_modularity") << "\n";
    for (const auto& s : comm.at("summaries")) {
        std::printf("  %3d  %7zu  %6.2f%%\n", s.at("label").get<int>(), s.at("size").get<std::size_t>(),
                    100.0 * s.at("relative_size").get<double>());
    }
}

void export_one(const GlobalFlags& flags, const std::string& format, const std::string& output) {
    const auto config = load(flags);
    const fs::path dir = config.output_dir;
    if (!fs::exists(dir / "core/nodes.tsv")) throw UsageError("missing core graph: run core first");
    if (!fs::exists(dir / "partition.tsv")) throw UsageError("missing partition.tsv: run louvain first");
    const auto g = read_graph(dir / "core");
    const auto p = read_partition(dir / "partition.tsv");
    export_graph(g, p, export_format_from_string(format), output, config.hash());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"citescope: backward citation network analysis"};
    app.require_subcommand(1);
    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "pipeline configuration file");
    app.add_option("--seed", flags.seed, "override rng_seed");
    app.add_flag("--force", flags.force, "rerun even if the config hash changed");
    app.add_flag("--plot-data", flags.plot_data, "also write long-format TSV matrices");

    std::vector<Stage> stages;
    std::function<void()> action;
    auto stage_command = [&](const std::string& name, const std::string& help, std::vector<Stage> s) {
        app.add_subcommand(name, help)->callback([&, s] {
            stages = s;
            action = [&] { run_stages(flags, stages); };
        });
    };
    stage_command("ingest", "parse the seed bibliography", {Stage::ingest});
    stage_command("crawl", "build the backward citation network", {Stage::crawl});
    stage_command("core", "largest component and degree-one pruning", {Stage::component, Stage::core});
    stage_command("communities", "Louvain communities and sub-communities",
                  {Stage::symmetrize, Stage::louvain, Stage::subcommunities});
    stage_command("metrics", "rank-size, matrices, Herfindahl, languages", {Stage::metrics});
    stage_command("run", "all stages", std::vector<Stage>(std::begin(all_stages), std::end(all_stages)));

    std::string format;
    std::string output;
    auto* exp = app.add_subcommand("export", "export the core graph with community labels");
    exp->add_option("--format", format, "graphml or edgelist")->check(CLI::IsMember({"graphml", "edgelist"}));
    exp->add_option("--output", output, "write a single file here instead of running the export stage");
    exp->callback([&] {
        if (!format.empty() && !output.empty()) {
            action = [&] { export_one(flags, format, output); };
        } else if (!format.empty() || !output.empty()) {
            action = [] { throw UsageError("--format and --output go together"); };
        } else {
            action = [&] { run_stages(flags, {Stage::export_graph}); };
        }
    });
    app.add_subcommand("stats", "print crawl statistics and community summaries")->callback([&] {
        action = [&] { print_stats(flags); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        action();
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
