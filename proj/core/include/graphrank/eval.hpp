#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graphrank/catalog.hpp"
#include "graphrank/extraction.hpp"
#include "graphrank/json_util.hpp"
#include "graphrank/prompts.hpp"
#include "graphrank/provider.hpp"
#include "graphrank/ranking.hpp"

namespace graphrank::eval {

// Binary relevance metrics over one ranked list. All return values in [0, 1].

/// (# relevant in the first min(k, len) positions) / k — the divisor is k
/// even when fewer than k items were retrieved.
double precision_at_k(const std::vector<int>& rel, std::size_t k);

/// 1 / rank of the first relevant item; 0 when none is relevant.
double reciprocal_rank(const std::vector<int>& rel);

/// Sum of P@i over relevant positions i, divided by the number of relevant
/// items in the judged ranked list; 0 when none is relevant.
double average_precision(const std::vector<int>& rel);

/// Binary-gain DCG@k = sum rel_i / log2(i + 1), normalized by the ideal DCG
/// of the same vector; 0 when the ideal DCG is 0.
double ndcg_at_k(const std::vector<int>& rel, std::size_t k);

/// Cohen's kappa over two parallel categorical label vectors (for imported
/// annotator files); 1.0 when observed and chance agreement coincide at 1.
double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b);

struct Judgment {
    std::string query_id;
    std::string product_id;
    int score = 0;  // 0..100 judge scale
    std::string judge;
};

class JudgmentSet {
  public:
    void add(Judgment j);
    std::optional<int> score(const std::string& query_id, const std::string& product_id) const;
    std::size_t size() const { return scores_.size(); }

    /// JSONL rows {"query_id","product_id","score","judge"}.
    void save(const std::filesystem::path& path) const;
    static JudgmentSet load(const std::filesystem::path& path);

  private:
    std::map<std::pair<std::string, std::string>, Judgment> scores_;
};

/// One provider round-trip scoring a query/candidate pair 0-100. Returns
/// nullopt on provider failure; the eval treats absent judgments as
/// not-relevant and counts them.
std::optional<Judgment> judge_pair(const catalog::ProductRecord& query,
                                   const extraction::AttributeSet& query_attrs,
                                   const catalog::ProductRecord& candidate,
                                   const extraction::AttributeSet& candidate_attrs,
                                   provider::ModelProvider& provider,
                                   const prompts::PromptLibrary& prompts,
                                   const provider::ProviderSettings& settings = {},
                                   provider::TranscriptLog* log = nullptr);

using SystemRun = std::map<std::string, ranking::RankedList>;  // query_id -> list

struct EvalOptions {
    std::vector<int> thresholds{80, 50};
    std::vector<int> ks{1, 3, 5, 10};
};

struct EvalReport {
    std::vector<int> thresholds;
    std::vector<int> ks;
    std::vector<std::string> systems;
    /// threshold -> system -> metric key ("ndcg@1", "p@5", "mrr", "map") -> percent.
    std::map<int, std::map<std::string, std::map<std::string, double>>> cells;
    std::size_t query_count = 0;
    std::size_t absent_judgments = 0;  // ranked items with no judgment, scored 0
    std::map<std::string, std::size_t> missing_lists;  // system -> queries without a run

    Json to_json() const;
    /// Fixed-width table: nDCG block then precision block per threshold.
    /// nDCG cells outside the strictest threshold are marked non-comparable.
    std::string to_table() const;
};

/// Scores every system over the union of query ids, at every threshold.
/// rel_i = (judgment >= threshold); a system missing a query's list scores
/// zero for that query and is flagged. Deterministic for fixed inputs.
EvalReport run_eval(const std::map<std::string, SystemRun>& systems,
                    const JudgmentSet& judgments, const EvalOptions& options = {});

}  // namespace graphrank::eval
