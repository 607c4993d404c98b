#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "graphrank/catalog.hpp"
#include "graphrank/json_util.hpp"
#include "graphrank/provider.hpp"
#include "graphrank/ranking.hpp"

namespace graphrank {

/// Everything the pipeline stages, CLI, and service share. Loaded from one
/// JSON file; provider endpoint/credentials can be overridden through
/// GRAPHRANK_* environment variables so secrets stay out of config files.
struct PipelineConfig {
    std::filesystem::path work_dir = "work";
    std::filesystem::path catalog_path;
    catalog::Format catalog_format = catalog::Format::jsonl;

    catalog::FilterPolicy filter{{}, 0};  // no filtering unless configured

    std::size_t k_d = 50;  // clamped to [1, 200]
    ranking::Ranker ranker = ranking::Ranker::graph;
    std::size_t parallelism = 4;
    std::vector<int> thresholds{80, 50};
    std::vector<int> ks{1, 3, 5, 10};
    double failure_ratio_threshold = 0.2;

    std::size_t embed_dimension = 64;
    std::uint64_t embed_seed = 42;

    std::string provider_kind = "heuristic";  // heuristic | scripted | http
    std::string provider_endpoint;
    std::string provider_api_key;
    double requests_per_sec = 0.0;  // 0 = unlimited
    provider::ProviderSettings provider_settings;
    std::filesystem::path transcript_in;   // replayed by scripted providers
    std::filesystem::path transcript_out;  // recorded raw exchanges

    std::filesystem::path prompts_dir;  // optional template overrides
    std::filesystem::path aliases_file; // optional manual alias overrides

    bool persist_online_extractions = true;
    int port = 8080;

    // Stage artifact locations, all under work_dir.
    std::filesystem::path catalog_artifact() const { return work_dir / "catalog.jsonl"; }
    std::filesystem::path ingest_report_file() const { return work_dir / "ingest_report.json"; }
    std::filesystem::path enriched_catalog_file() const {
        return work_dir / "catalog_enriched.jsonl";
    }
    std::filesystem::path registry_file() const { return work_dir / "registry.json"; }
    std::filesystem::path suggestions_file() const {
        return work_dir / "merge_suggestions.json";
    }
    std::filesystem::path attributes_file() const { return work_dir / "attributes.jsonl"; }
    std::filesystem::path extract_report_file() const {
        return work_dir / "extract_report.json";
    }
    std::filesystem::path graph_file() const { return work_dir / "graph.jsonl"; }
    std::filesystem::path dense_index_file() const { return work_dir / "dense.idx"; }
    std::filesystem::path sparse_index_file() const { return work_dir / "sparse.json"; }
    std::filesystem::path manifest_file() const { return work_dir / "pipeline_manifest.json"; }

    static PipelineConfig from_json(const Json& j);
    static PipelineConfig from_file(const std::filesystem::path& path);

    /// GRAPHRANK_PROVIDER_KIND / _ENDPOINT / _API_KEY / _RPS overrides.
    void apply_env();

    /// Clamps k_d into [1, 200], enforces parallelism >= 1; throws on
    /// inconsistent settings.
    void validate();
};

ranking::Ranker ranker_from_string(const std::string& s);

}  // namespace graphrank
