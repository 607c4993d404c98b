#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "graphrank/catalog.hpp"
#include "graphrank/graph.hpp"
#include "graphrank/json_util.hpp"
#include "graphrank/prompts.hpp"
#include "graphrank/provider.hpp"
#include "graphrank/retrieval.hpp"

namespace graphrank::ranking {

/// Deterministic token-count proxy: number of maximal alphanumeric runs plus
/// number of non-space punctuation characters. Bytes outside printable ASCII
/// count as punctuation. Used for budget checks in place of vendor tokenizers.
int count_tokens(std::string_view text);

/// Longest prefix of `text` with count_tokens(prefix) <= max_tokens.
std::string truncate_tokens(std::string_view text, int max_tokens);

/// Candidate-only attributes are capped to bound the prompt budget;
/// schema attributes are never dropped.
constexpr std::size_t kMaxExtraAttributes = 10;

/// Raw-ranker per-product budget, the unstructured baseline's scale.
constexpr int kRawTokenCap = 700;

struct CandidateBlock {
    std::string candidate_id;
    std::vector<graph::Triple> triples;
    std::vector<std::pair<std::string, std::string>> extra_attributes;  // candidate-only
};

struct RankPayload {
    std::string query_id;
    std::vector<std::pair<std::string, std::string>> query_block;  // ordered attr/value
    std::vector<CandidateBlock> candidate_blocks;                  // candidate-set order
    std::string instructions_version;
};

/// Builds the structured payload for the graph ranker. Throws on an empty
/// candidate set ("nothing to rank") and on query-id mismatch.
RankPayload build_rank_payload(const graph::LocalSubgraph& subgraph,
                               const retrieval::CandidateSet& candidates,
                               const prompts::PromptLibrary& prompts);

/// Rendered prompt text; a pure function of the payload.
std::string render_graph_prompt(const RankPayload& payload,
                                const prompts::PromptLibrary& prompts);

struct RawBlock {
    std::string candidate_id;
    std::string text;  // product_text truncated to the token cap
};

struct RawPayload {
    std::string query_id;
    std::string query_text;
    std::vector<RawBlock> candidate_blocks;
    std::string instructions_version;
};

RawPayload build_raw_payload(const catalog::ProductRecord& query,
                             const std::vector<catalog::ProductRecord>& candidates,
                             const prompts::PromptLibrary& prompts,
                             int token_cap = kRawTokenCap);

std::string render_raw_prompt(const RawPayload& payload, const prompts::PromptLibrary& prompts);

enum class Source { model, fallback };
enum class Ranker { graph, raw, fallback };

std::string to_string(Source s);
std::string to_string(Ranker r);

struct ScoredCandidate {
    std::string product_id;
    int score = 0;  // 0..100
    Source source = Source::model;
    std::string rationale;
};

struct TokenStats {
    std::vector<int> per_product_tokens;  // structured rendering, query first
    long total_tokens = 0;
    long baseline_total_tokens = 0;                // raw-text equivalent
    std::optional<double> reduction_ratio;  // 1 - total/baseline; absent when baseline 0

    Json to_json() const;
};

struct RankedList {
    std::string query_id;
    std::vector<ScoredCandidate> items;  // score desc, retrieval score desc, id asc
    Ranker ranker = Ranker::graph;
    bool degraded = false;  // total provider failure was absorbed by the fallback
    TokenStats token_stats;

    Json to_json() const;
};

/// Deterministic fallback and test oracle: over the query's attributes,
/// exact normalized-value match earns 1.0 credit, containment (one normalized
/// value a substring of the other, shorter side >= 3 chars) earns 0.5,
/// mismatch or absence earns 0; score = round(100 * credit / |A_q|).
/// Query-normalized: not symmetric unless attribute sets are equal.
int attribute_overlap_score(const graph::LocalSubgraph& subgraph,
                            const std::string& candidate_id);

/// List-wise graph ranking. The provider returns 0-100 scores per candidate;
/// missing/extra/duplicate ids or out-of-range scores trigger one repair
/// re-prompt, after which unresolved candidates are scored by the fallback.
/// Total provider failure yields a full-fallback list flagged degraded.
/// Always returns exactly the input candidates, each once.
RankedList rank_graph(const RankPayload& payload, const graph::LocalSubgraph& subgraph,
                      const retrieval::CandidateSet& candidates,
                      provider::ModelProvider& provider, const prompts::PromptLibrary& prompts,
                      const provider::ProviderSettings& settings = {},
                      provider::TranscriptLog* log = nullptr);

/// Raw-text baseline with the same robustness contract. `fallback_score`
/// supplies degraded scores (the pipeline wires in attribute_overlap_score).
RankedList rank_raw(const RawPayload& payload, const retrieval::CandidateSet& candidates,
                    provider::ModelProvider& provider, const prompts::PromptLibrary& prompts,
                    const std::function<int(const std::string&)>& fallback_score = {},
                    const provider::ProviderSettings& settings = {},
                    provider::TranscriptLog* log = nullptr);

/// Pure deterministic ranking by attribute overlap; no provider involved.
RankedList rank_fallback(const graph::LocalSubgraph& subgraph,
                         const retrieval::CandidateSet& candidates);

/// Per-product token accounting for the structured rendering against the raw
/// baseline rendering (query block first, then candidates).
TokenStats token_report(const RankPayload& graph_payload, const RawPayload& raw_payload);

}  // namespace graphrank::ranking
