#include "graphrank/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "graphrank/errors.hpp"
#include "graphrank/response_schemas.hpp"
#include "graphrank/text.hpp"

namespace graphrank::eval {

double precision_at_k(const std::vector<int>& rel, std::size_t k) {
    if (k == 0) throw Error("precision_at_k needs k >= 1");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, rel.size()); ++i) {
        if (rel[i] > 0) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

double reciprocal_rank(const std::vector<int>& rel) {
    for (std::size_t i = 0; i < rel.size(); ++i) {
        if (rel[i] > 0) return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

double average_precision(const std::vector<int>& rel) {
    std::size_t relevant = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < rel.size(); ++i) {
        if (rel[i] > 0) {
            ++relevant;
            sum += static_cast<double>(relevant) / static_cast<double>(i + 1);
        }
    }
    return relevant == 0 ? 0.0 : sum / static_cast<double>(relevant);
}

double ndcg_at_k(const std::vector<int>& rel, std::size_t k) {
    auto dcg = [k](const std::vector<int>& v) {
        double sum = 0.0;
        for (std::size_t i = 0; i < std::min(k, v.size()); ++i) {
            if (v[i] > 0) sum += 1.0 / std::log2(static_cast<double>(i + 2));
        }
        return sum;
    };
    std::vector<int> ideal = rel;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = dcg(ideal);
    return idcg == 0.0 ? 0.0 : dcg(rel) / idcg;
}

double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw Error("cohen_kappa needs two equal-length, non-empty label vectors");
    }
    const double n = static_cast<double>(a.size());
    std::map<int, double> freq_a, freq_b;
    double observed = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) observed += 1.0;
        ++freq_a[a[i]];
        ++freq_b[b[i]];
    }
    observed /= n;
    double chance = 0.0;
    for (const auto& [label, count] : freq_a) {
        auto it = freq_b.find(label);
        if (it != freq_b.end()) chance += (count / n) * (it->second / n);
    }
    if (chance == 1.0) return 1.0;
    return (observed - chance) / (1.0 - chance);
}

void JudgmentSet::add(Judgment j) {
    if (j.score < 0 || j.score > 100) {
        throw Error("judgment score out of range for " + j.query_id + "/" + j.product_id);
    }
    scores_[{j.query_id, j.product_id}] = std::move(j);
}

std::optional<int> JudgmentSet::score(const std::string& query_id,
                                      const std::string& product_id) const {
    auto it = scores_.find({query_id, product_id});
    if (it == scores_.end()) return std::nullopt;
    return it->second.score;
}

void JudgmentSet::save(const std::filesystem::path& path) const {
    std::string out;
    for (const auto& [key, j] : scores_) {
        (void)key;
        out += dump_line(Json{{"query_id", j.query_id},
                              {"product_id", j.product_id},
                              {"score", j.score},
                              {"judge", j.judge}});
        out += '\n';
    }
    write_file(path, out);
}

JudgmentSet JudgmentSet::load(const std::filesystem::path& path) {
    JudgmentSet set;
    for_each_line(path, [&](std::size_t line, std::string_view text_line) {
        Json row = Json::parse(text_line, nullptr, false);
        if (row.is_discarded()) throw ParseError("bad judgment row", line);
        Judgment j;
        j.query_id = row.at("query_id").get<std::string>();
        j.product_id = row.at("product_id").get<std::string>();
        j.score = row.at("score").get<int>();
        j.judge = row.value("judge", std::string{});
        set.add(std::move(j));
    });
    return set;
}

namespace {

std::string attribute_block(const catalog::ProductRecord& rec,
                            const extraction::AttributeSet& attrs) {
    std::vector<std::string> lines;
    lines.push_back("title: " + Json(rec.title).dump());
    for (const auto& [name, value] : attrs.pairs) {
        lines.push_back("- " + Json(name).dump() + ": " + Json(value).dump());
    }
    return text::join(lines, "\n");
}

}  // namespace

std::optional<Judgment> judge_pair(const catalog::ProductRecord& query,
                                   const extraction::AttributeSet& query_attrs,
                                   const catalog::ProductRecord& candidate,
                                   const extraction::AttributeSet& candidate_attrs,
                                   provider::ModelProvider& prov,
                                   const prompts::PromptLibrary& prompts,
                                   const provider::ProviderSettings& settings,
                                   provider::TranscriptLog* log) {
    std::string prompt =
        prompts.render("judge", {{"query_block", attribute_block(query, query_attrs)},
                                 {"candidate_block", attribute_block(candidate, candidate_attrs)}});
    try {
        auto result = provider::generate_structured(prov, prompt, provider::schemas::judge(),
                                                    settings, log);
        double raw = result.payload["score"].get<double>();
        Judgment j;
        j.query_id = query.product_id;
        j.product_id = candidate.product_id;
        j.score = std::clamp(static_cast<int>(std::floor(raw + 0.5)), 0, 100);
        j.judge = prov.name() + ":" + prompts.version_tag("judge");
        return j;
    } catch (const ProviderError&) {
        return std::nullopt;
    }
}

namespace {

struct QueryMetrics {
    std::map<std::string, double> values;  // metric key -> [0,1]
};

QueryMetrics metrics_for(const std::vector<int>& rel, const std::vector<int>& ks) {
    QueryMetrics m;
    for (int k : ks) {
        m.values["ndcg@" + std::to_string(k)] = ndcg_at_k(rel, static_cast<std::size_t>(k));
        m.values["p@" + std::to_string(k)] = precision_at_k(rel, static_cast<std::size_t>(k));
    }
    m.values["mrr"] = reciprocal_rank(rel);
    m.values["map"] = average_precision(rel);
    return m;
}

}  // namespace

EvalReport run_eval(const std::map<std::string, SystemRun>& systems,
                    const JudgmentSet& judgments, const EvalOptions& options) {
    EvalReport report;
    report.thresholds = options.thresholds;
    report.ks = options.ks;

    std::set<std::string> query_ids;
    for (const auto& [name, run] : systems) {
        report.systems.push_back(name);
        for (const auto& [qid, list] : run) {
            (void)list;
            query_ids.insert(qid);
        }
    }
    report.query_count = query_ids.size();
    if (query_ids.empty()) return report;

    for (int threshold : options.thresholds) {
        for (const auto& [name, run] : systems) {
            std::map<std::string, double> sums;
            for (const auto& qid : query_ids) {
                std::vector<int> rel;
                auto it = run.find(qid);
                if (it == run.end()) {
                    ++report.missing_lists[name];  // scored as all-zero
                } else {
                    for (const auto& item : it->second.items) {
                        auto score = judgments.score(qid, item.product_id);
                        if (!score) ++report.absent_judgments;
                        rel.push_back(score && *score >= threshold ? 1 : 0);
                    }
                }
                QueryMetrics m = metrics_for(rel, options.ks);
                for (const auto& [key, value] : m.values) sums[key] += value;
            }
            auto& row = report.cells[threshold][name];
            for (const auto& [key, total] : sums) {
                double percent = 100.0 * total / static_cast<double>(query_ids.size());
                // 4 decimals: the table precision, stable across platforms.
                row[key] = std::round(percent * 1e4) / 1e4;
            }
        }
    }
    // absent_judgments double-counts across thresholds; report per-threshold mean.
    report.absent_judgments /= std::max<std::size_t>(1, options.thresholds.size());
    return report;
}

Json EvalReport::to_json() const {
    Json cells_json = Json::object();
    int strictest = thresholds.empty() ? 0 : *std::max_element(thresholds.begin(), thresholds.end());
    for (const auto& [threshold, rows] : cells) {
        Json block = Json::object();
        for (const auto& [system, metrics] : rows) {
            block[system] = metrics;
        }
        cells_json[std::to_string(threshold)] = std::move(block);
    }
    Json non_comparable = Json::array();
    for (int threshold : thresholds) {
        if (threshold != strictest) {
            for (int k : ks) {
                non_comparable.push_back("ndcg@" + std::to_string(k) + " @ threshold " +
                                         std::to_string(threshold));
            }
        }
    }
    return Json{{"thresholds", thresholds},
                {"ks", ks},
                {"systems", systems},
                {"query_count", query_count},
                {"absent_judgments", absent_judgments},
                {"missing_lists", missing_lists},
                {"non_comparable", std::move(non_comparable)},
                {"cells", std::move(cells_json)}};
}

std::string EvalReport::to_table() const {
    std::vector<std::string> columns;
    for (int k : ks) columns.push_back("nDCG@" + std::to_string(k));
    for (int k : ks) columns.push_back("P@" + std::to_string(k));
    columns.push_back("MRR");
    columns.push_back("mAP");

    std::size_t name_width = 6;
    for (const auto& s : systems) name_width = std::max(name_width, s.size());

    int strictest = thresholds.empty() ? 0 : *std::max_element(thresholds.begin(), thresholds.end());

    std::string out;
    char buf[64];
    for (int threshold : thresholds) {
        out += "Eval Threshold >= " + std::to_string(threshold) + "\n";
        std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), "Method");
        out += buf;
        for (const auto& c : columns) {
            std::snprintf(buf, sizeof buf, " %9s", c.c_str());
            out += buf;
        }
        out += '\n';
        auto block = cells.find(threshold);
        for (const auto& system : systems) {
            std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), system.c_str());
            out += buf;
            for (const auto& column : columns) {
                std::string key = text::lower(column);
                double value = 0.0;
                if (block != cells.end()) {
                    auto row = block->second.find(system);
                    if (row != block->second.end()) {
                        auto cell = row->second.find(key);
                        if (cell != row->second.end()) value = cell->second;
                    }
                }
                bool ndcg_col = column.rfind("nDCG", 0) == 0;
                if (ndcg_col && threshold != strictest) {
                    std::snprintf(buf, sizeof buf, " %9s", "n/c");  // non-comparable
                } else {
                    std::snprintf(buf, sizeof buf, " %9.2f", value);
                }
                out += buf;
            }
            out += '\n';
        }
        out += '\n';
    }
    if (thresholds.size() > 1) {
        out += "n/c: nDCG is reported under the strictest threshold only.\n";
    }
    return out;
}

}  // namespace graphrank::eval
