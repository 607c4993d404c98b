#include "graphrank/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "graphrank/errors.hpp"
#include "graphrank/response_schemas.hpp"
#include "graphrank/text.hpp"

namespace graphrank::ranking {

int count_tokens(std::string_view input) {
    int tokens = 0;
    bool in_run = false;
    for (char c : input) {
        unsigned char u = static_cast<unsigned char>(c);
        if (text::is_ascii_alnum(u)) {
            if (!in_run) {
                ++tokens;
                in_run = true;
            }
        } else {
            in_run = false;
            if (!text::is_ascii_space(u)) ++tokens;  // punctuation, one per char
        }
    }
    return tokens;
}

std::string truncate_tokens(std::string_view input, int max_tokens) {
    if (max_tokens <= 0) return {};
    int tokens = 0;
    bool in_run = false;
    std::size_t cut = 0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        unsigned char u = static_cast<unsigned char>(input[i]);
        if (text::is_ascii_alnum(u)) {
            if (!in_run) {
                if (tokens == max_tokens) break;
                ++tokens;
                in_run = true;
            }
        } else {
            in_run = false;
            if (!text::is_ascii_space(u)) {
                if (tokens == max_tokens) break;
                ++tokens;
            }
        }
        cut = i + 1;
    }
    return std::string(input.substr(0, cut));
}

std::string to_string(Source s) { return s == Source::model ? "model" : "fallback"; }

std::string to_string(Ranker r) {
    switch (r) {
        case Ranker::graph: return "graph";
        case Ranker::raw: return "raw";
        case Ranker::fallback: return "fallback";
    }
    return "graph";
}

namespace {

/// Attribute ordering shared by query blocks and extra attributes:
/// schema order first, remaining names lexicographic.
std::vector<std::string> ordered_attribute_names(
    const std::map<std::string, std::string>& attrs,
    const std::vector<std::string>& schema_order) {
    std::vector<std::string> ordered;
    std::set<std::string> emitted;
    for (const auto& name : schema_order) {
        if (attrs.count(name) > 0 && emitted.insert(name).second) ordered.push_back(name);
    }
    for (const auto& [name, value] : attrs) {
        (void)value;
        if (emitted.insert(name).second) ordered.push_back(name);
    }
    return ordered;
}

std::string quoted(const std::string& s) { return Json(s).dump(); }

std::string render_query_block(const RankPayload& payload) {
    std::vector<std::string> lines;
    lines.reserve(payload.query_block.size());
    for (const auto& [attr, value] : payload.query_block) {
        lines.push_back("- " + quoted(attr) + ": " + quoted(value));
    }
    if (lines.empty()) lines.push_back("(no attributes)");
    return text::join(lines, "\n");
}

std::string render_candidate_block(const CandidateBlock& block) {
    std::string out = "### candidate " + block.candidate_id + "\n";
    std::vector<std::string> lines;
    for (const auto& t : block.triples) {
        lines.push_back("- " + quoted(t.attribute) + ": query=" + quoted(t.query_value) +
                        " | candidate=" +
                        (t.candidate_value ? quoted(*t.candidate_value) : "[absent]"));
    }
    if (lines.empty()) lines.push_back("(no shared attributes)");
    out += text::join(lines, "\n");
    if (!block.extra_attributes.empty()) {
        out += "\nextra:";
        for (const auto& [attr, value] : block.extra_attributes) {
            out += "\n- " + quoted(attr) + ": " + quoted(value);
        }
    }
    return out;
}

}  // namespace

RankPayload build_rank_payload(const graph::LocalSubgraph& subgraph,
                               const retrieval::CandidateSet& candidates,
                               const prompts::PromptLibrary& prompts) {
    if (!candidates.query_id.empty() && candidates.query_id != subgraph.query_id) {
        throw Error("candidate set belongs to query " + candidates.query_id + ", subgraph to " +
                    subgraph.query_id);
    }
    if (candidates.entries.empty()) throw Error("nothing to rank: empty candidate set");

    RankPayload payload;
    payload.query_id = subgraph.query_id;
    payload.instructions_version = prompts.version_tag("rank_graph");

    const auto& query_attrs = subgraph.attributes_of(subgraph.query_id);
    for (const auto& name : ordered_attribute_names(query_attrs, subgraph.attribute_order)) {
        payload.query_block.emplace_back(name, query_attrs.at(name));
    }

    for (const auto& entry : candidates.entries) {
        CandidateBlock block;
        block.candidate_id = entry.product_id;
        block.triples = graph::shared_triples(subgraph, entry.product_id);

        const auto& cand_attrs = subgraph.attributes_of(entry.product_id);
        std::map<std::string, std::string> extras;
        for (const auto& [attr, value] : cand_attrs) {
            if (query_attrs.count(attr) == 0) extras.emplace(attr, value);
        }
        for (const auto& name : ordered_attribute_names(extras, subgraph.attribute_order)) {
            if (block.extra_attributes.size() >= kMaxExtraAttributes) break;
            block.extra_attributes.emplace_back(name, extras.at(name));
        }
        payload.candidate_blocks.push_back(std::move(block));
    }
    return payload;
}

std::string render_graph_prompt(const RankPayload& payload,
                                const prompts::PromptLibrary& prompts) {
    std::vector<std::string> blocks;
    blocks.reserve(payload.candidate_blocks.size());
    for (const auto& block : payload.candidate_blocks) {
        blocks.push_back(render_candidate_block(block));
    }
    return prompts.render("rank_graph", {{"query_block", render_query_block(payload)},
                                         {"candidate_blocks", text::join(blocks, "\n\n")}});
}

RawPayload build_raw_payload(const catalog::ProductRecord& query,
                             const std::vector<catalog::ProductRecord>& candidates,
                             const prompts::PromptLibrary& prompts, int token_cap) {
    RawPayload payload;
    payload.query_id = query.product_id;
    payload.query_text = truncate_tokens(catalog::product_text(query), token_cap);
    payload.instructions_version = prompts.version_tag("rank_raw");
    for (const auto& rec : candidates) {
        payload.candidate_blocks.push_back(
            {rec.product_id, truncate_tokens(catalog::product_text(rec), token_cap)});
    }
    return payload;
}

std::string render_raw_prompt(const RawPayload& payload, const prompts::PromptLibrary& prompts) {
    std::vector<std::string> blocks;
    blocks.reserve(payload.candidate_blocks.size());
    for (const auto& block : payload.candidate_blocks) {
        blocks.push_back("### candidate " + block.candidate_id + "\n" + block.text);
    }
    return prompts.render("rank_raw", {{"query_text", payload.query_text},
                                       {"candidate_blocks", text::join(blocks, "\n\n")}});
}

int attribute_overlap_score(const graph::LocalSubgraph& subgraph,
                            const std::string& candidate_id) {
    const auto& query_attrs = subgraph.attributes_of(subgraph.query_id);
    const auto& cand_attrs = subgraph.attributes_of(candidate_id);
    if (query_attrs.empty()) return 0;

    double credit = 0.0;
    for (const auto& [attr, raw_qv] : query_attrs) {
        auto it = cand_attrs.find(attr);
        if (it == cand_attrs.end()) continue;
        std::string qv = text::normalize_match(raw_qv);
        std::string cv = text::normalize_match(it->second);
        if (qv == cv) {
            credit += 1.0;
            continue;
        }
        const std::string& shorter = qv.size() <= cv.size() ? qv : cv;
        const std::string& longer = qv.size() <= cv.size() ? cv : qv;
        if (shorter.size() >= 3 && longer.find(shorter) != std::string::npos) {
            credit += 0.5;
        }
    }
    double score = 100.0 * credit / static_cast<double>(query_attrs.size());
    return static_cast<int>(std::floor(score + 0.5));
}

namespace {

struct Resolution {
    int score = 0;
    std::string rationale;
};

struct ParseOutcome {
    std::map<std::string, Resolution> resolved;
    std::vector<std::string> problems;
};

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

ParseOutcome parse_scores(const Json& payload, const std::vector<std::string>& candidate_ids) {
    ParseOutcome out;
    std::set<std::string> wanted(candidate_ids.begin(), candidate_ids.end());
    std::set<std::string> seen;

    for (const auto& entry : payload["scores"]) {
        std::string id = entry["id"].get<std::string>();
        if (wanted.count(id) == 0) {
            out.problems.push_back("unknown candidate id '" + id + "'");
            continue;
        }
        if (!seen.insert(id).second) {
            out.problems.push_back("duplicate entry for '" + id + "'");
            continue;
        }
        int score = round_half_up(entry["score"].get<double>());
        if (score < 0 || score > 100) {
            out.problems.push_back("score for '" + id + "' out of range 0-100");
            continue;
        }
        Resolution r;
        r.score = score;
        if (entry.contains("rationale") && entry["rationale"].is_string()) {
            r.rationale = entry["rationale"].get<std::string>();
        }
        out.resolved.emplace(std::move(id), std::move(r));
    }
    for (const auto& id : candidate_ids) {
        if (out.resolved.count(id) == 0) out.problems.push_back("missing score for '" + id + "'");
    }
    return out;
}

void sort_items(std::vector<ScoredCandidate>& items, const retrieval::CandidateSet& candidates) {
    std::map<std::string, double> retrieval_scores;
    for (const auto& e : candidates.entries) retrieval_scores[e.product_id] = e.score;
    std::sort(items.begin(), items.end(),
              [&](const ScoredCandidate& a, const ScoredCandidate& b) {
                  if (a.score != b.score) return a.score > b.score;
                  double ra = retrieval_scores[a.product_id];
                  double rb = retrieval_scores[b.product_id];
                  if (ra != rb) return ra > rb;
                  return a.product_id < b.product_id;
              });
}

/// Shared listwise flow for the graph and raw rankers: call, parse, repair
/// once on id-level anomalies, fall back per unresolved candidate, and
/// degrade to a full-fallback list when the provider is entirely down.
RankedList rank_listwise(const std::string& prompt, const std::string& query_id,
                         const std::vector<std::string>& candidate_ids,
                         const retrieval::CandidateSet& candidates, Ranker ranker,
                         provider::ModelProvider& prov,
                         const std::function<int(const std::string&)>& fallback_score,
                         const provider::ProviderSettings& settings,
                         provider::TranscriptLog* log) {
    RankedList list;
    list.query_id = query_id;
    list.ranker = ranker;

    auto schema = provider::schemas::rank_scores();
    std::map<std::string, Resolution> resolved;
    bool any_response = false;

    try {
        auto first = provider::generate_structured(prov, prompt, schema, settings, log);
        any_response = true;
        ParseOutcome outcome = parse_scores(first.payload, candidate_ids);
        resolved = std::move(outcome.resolved);

        if (!outcome.problems.empty()) {
            std::string repair_prompt =
                prompt + "\n\nYour previous answer had problems: " +
                text::join(outcome.problems, "; ") +
                "\nReturn scores for exactly these candidate ids, each exactly once: " +
                text::join(candidate_ids, ", ") + ".";
            try {
                auto second =
                    provider::generate_structured(prov, repair_prompt, schema, settings, log);
                ParseOutcome repaired = parse_scores(second.payload, candidate_ids);
                // The repair answer wins; first-round entries fill its gaps.
                for (auto& [id, r] : resolved) {
                    repaired.resolved.emplace(id, std::move(r));
                }
                resolved = std::move(repaired.resolved);
            } catch (const ProviderError&) {
                // keep first-round resolutions
            }
        }
    } catch (const ProviderError&) {
        // fall through: every candidate gets a fallback score
    }

    for (const auto& id : candidate_ids) {
        auto it = resolved.find(id);
        if (it != resolved.end()) {
            list.items.push_back({id, it->second.score, Source::model, it->second.rationale});
        } else {
            int score = fallback_score ? fallback_score(id) : 0;
            list.items.push_back({id, std::clamp(score, 0, 100), Source::fallback, {}});
        }
    }
    if (!any_response) {
        list.ranker = Ranker::fallback;
        list.degraded = true;
    }
    sort_items(list.items, candidates);
    return list;
}

}  // namespace

RankedList rank_graph(const RankPayload& payload, const graph::LocalSubgraph& subgraph,
                      const retrieval::CandidateSet& candidates,
                      provider::ModelProvider& prov, const prompts::PromptLibrary& prompts,
                      const provider::ProviderSettings& settings, provider::TranscriptLog* log) {
    std::vector<std::string> ids;
    ids.reserve(payload.candidate_blocks.size());
    for (const auto& block : payload.candidate_blocks) ids.push_back(block.candidate_id);

    auto fallback = [&](const std::string& id) { return attribute_overlap_score(subgraph, id); };
    RankedList list = rank_listwise(render_graph_prompt(payload, prompts), payload.query_id, ids,
                                    candidates, Ranker::graph, prov, fallback, settings, log);

    list.token_stats.per_product_tokens.push_back(count_tokens(render_query_block(payload)));
    for (const auto& block : payload.candidate_blocks) {
        list.token_stats.per_product_tokens.push_back(count_tokens(render_candidate_block(block)));
    }
    for (int t : list.token_stats.per_product_tokens) list.token_stats.total_tokens += t;
    return list;
}

RankedList rank_raw(const RawPayload& payload, const retrieval::CandidateSet& candidates,
                    provider::ModelProvider& prov, const prompts::PromptLibrary& prompts,
                    const std::function<int(const std::string&)>& fallback_score,
                    const provider::ProviderSettings& settings, provider::TranscriptLog* log) {
    if (payload.candidate_blocks.empty()) throw Error("nothing to rank: empty candidate set");

    std::vector<std::string> ids;
    ids.reserve(payload.candidate_blocks.size());
    for (const auto& block : payload.candidate_blocks) ids.push_back(block.candidate_id);

    RankedList list = rank_listwise(render_raw_prompt(payload, prompts), payload.query_id, ids,
                                    candidates, Ranker::raw, prov, fallback_score, settings, log);

    list.token_stats.per_product_tokens.push_back(count_tokens(payload.query_text));
    for (const auto& block : payload.candidate_blocks) {
        list.token_stats.per_product_tokens.push_back(count_tokens(block.text));
    }
    for (int t : list.token_stats.per_product_tokens) list.token_stats.total_tokens += t;
    return list;
}

RankedList rank_fallback(const graph::LocalSubgraph& subgraph,
                         const retrieval::CandidateSet& candidates) {
    if (candidates.entries.empty()) throw Error("nothing to rank: empty candidate set");

    RankedList list;
    list.query_id = subgraph.query_id;
    list.ranker = Ranker::fallback;
    for (const auto& entry : candidates.entries) {
        list.items.push_back({entry.product_id, attribute_overlap_score(subgraph, entry.product_id),
                              Source::fallback,
                              {}});
    }
    sort_items(list.items, candidates);
    return list;
}

TokenStats token_report(const RankPayload& graph_payload, const RawPayload& raw_payload) {
    TokenStats stats;
    stats.per_product_tokens.push_back(count_tokens(render_query_block(graph_payload)));
    for (const auto& block : graph_payload.candidate_blocks) {
        stats.per_product_tokens.push_back(count_tokens(render_candidate_block(block)));
    }
    for (int t : stats.per_product_tokens) stats.total_tokens += t;

    stats.baseline_total_tokens += count_tokens(raw_payload.query_text);
    for (const auto& block : raw_payload.candidate_blocks) {
        stats.baseline_total_tokens += count_tokens(block.text);
    }
    if (stats.baseline_total_tokens > 0) {
        stats.reduction_ratio = 1.0 - static_cast<double>(stats.total_tokens) /
                                          static_cast<double>(stats.baseline_total_tokens);
    }
    return stats;
}

Json TokenStats::to_json() const {
    Json j{{"per_product_tokens", per_product_tokens},
           {"total_tokens", total_tokens},
           {"baseline_total_tokens", baseline_total_tokens}};
    if (reduction_ratio) j["reduction_ratio"] = *reduction_ratio;
    return j;
}

Json RankedList::to_json() const {
    Json items_json = Json::array();
    for (const auto& item : items) {
        Json row{{"product_id", item.product_id},
                 {"score", item.score},
                 {"source", to_string(item.source)}};
        if (!item.rationale.empty()) row["rationale"] = item.rationale;
        items_json.push_back(std::move(row));
    }
    return Json{{"query_id", query_id},
                {"ranker", to_string(ranker)},
                {"degraded", degraded},
                {"items", std::move(items_json)},
                {"token_stats", token_stats.to_json()}};
}

}  // namespace graphrank::ranking
