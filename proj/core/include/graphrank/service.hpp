#pragma once

#include <memory>
#include <string>
#include <vector>

#include "graphrank/config.hpp"
#include "graphrank/eval.hpp"
#include "graphrank/graph.hpp"
#include "graphrank/pipeline.hpp"
#include "graphrank/retrieval.hpp"
#include "graphrank/schema.hpp"

namespace graphrank::service {

/// The offline artifacts the online path serves from. load() fails fast when
/// a file is missing or the attribute store was written at a different
/// registry version than the registry file carries.
struct Artifacts {
    catalog::ProductStore store;
    schema::SchemaRegistry registry;
    extraction::AttributeStore attributes;
    graph::AttributeGraph graph;
    retrieval::DenseIndex dense;
    retrieval::SparseIndex sparse;

    static Artifacts load(const PipelineConfig& config);
};

struct StageTimings {
    double retrieve_ms = 0.0;
    double extract_ms = 0.0;
    double subgraph_ms = 0.0;
    double rank_ms = 0.0;

    Json to_json() const;
};

struct SimilarItem {
    std::string product_id;
    int score = 0;
    ranking::Source source = ranking::Source::model;
    std::vector<std::string> matched_attributes;  // exact-value matches, capped
};

struct SimilarResponse {
    std::string query_id;
    std::vector<SimilarItem> items;
    ranking::Ranker ranker = ranking::Ranker::graph;
    bool degraded = false;
    ranking::TokenStats token_stats;
    StageTimings timings;

    Json to_json() const;
};

/// One implementation behind both the CLI `rank`/`search` verbs and the HTTP
/// service, so offline and online answers cannot drift apart.
class ServiceContext {
  public:
    ServiceContext(PipelineConfig config, Artifacts artifacts,
                   pipeline::ProviderBundle& providers, prompts::PromptLibrary prompts);

    retrieval::CandidateSet search(const std::string& query_id, std::size_t k,
                                   retrieval::Method method) const;

    /// Retrieve -> extract query attributes on demand -> local subgraph ->
    /// rank. Throws NotFoundError on unknown ids.
    SimilarResponse similar(const std::string& query_id, std::size_t k, ranking::Ranker kind);

    ranking::RankedList rank(const std::string& query_id, std::size_t k, ranking::Ranker kind);

    Json product_attributes(const std::string& product_id) const;
    Json stats() const;

    const Artifacts& artifacts() const { return artifacts_; }
    std::size_t default_k() const { return config_.k_d; }

  private:
    SimilarResponse similar_impl(const std::string& query_id, std::size_t k,
                                 ranking::Ranker kind, StageTimings& timings);

    PipelineConfig config_;
    Artifacts artifacts_;
    pipeline::ProviderBundle& providers_;
    prompts::PromptLibrary prompts_;
    std::unique_ptr<schema::SchemaService> schemas_;
};

/// Blocks serving GET /v1/similar, /v1/product/{id}/attributes, /healthz.
/// Returns a process exit code.
int run_server(ServiceContext& context, int port);

}  // namespace graphrank::service
