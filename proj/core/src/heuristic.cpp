#include "graphrank/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "graphrank/hash.hpp"
#include "graphrank/text.hpp"

namespace graphrank::provider {

namespace {

/// Everything after the first occurrence of `marker`; empty when absent.
std::string_view after(std::string_view s, std::string_view marker) {
    std::size_t pos = s.find(marker);
    if (pos == std::string_view::npos) return {};
    return s.substr(pos + marker.size());
}

std::string_view before(std::string_view s, std::string_view marker) {
    std::size_t pos = s.find(marker);
    return pos == std::string_view::npos ? s : s.substr(0, pos);
}

std::string_view first_line(std::string_view s) {
    return before(s, "\n");
}

/// Parses the JSON string literal starting at s[pos] (which must be '"').
/// Returns the decoded value and advances pos past the closing quote.
std::optional<std::string> parse_json_string_at(std::string_view s, std::size_t& pos) {
    if (pos >= s.size() || s[pos] != '"') return std::nullopt;
    std::size_t end = pos + 1;
    while (end < s.size()) {
        if (s[end] == '\\') {
            end += 2;
            continue;
        }
        if (s[end] == '"') break;
        ++end;
    }
    if (end >= s.size()) return std::nullopt;
    Json j = Json::parse(s.substr(pos, end - pos + 1), nullptr, false);
    if (j.is_discarded() || !j.is_string()) return std::nullopt;
    pos = end + 1;
    return j.get<std::string>();
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

double value_credit(const std::string& a, const std::string& b) {
    std::string na = text::normalize_match(a);
    std::string nb = text::normalize_match(b);
    if (na == nb) return 1.0;
    const std::string& shorter = na.size() <= nb.size() ? na : nb;
    const std::string& longer = na.size() <= nb.size() ? nb : na;
    if (shorter.size() >= 3 && longer.find(shorter) != std::string::npos) return 0.5;
    return 0.0;
}

double token_jaccard(std::string_view a, std::string_view b) {
    auto toks = [](std::string_view s) {
        std::set<std::string> out;
        std::string current;
        for (char c : s) {
            if (text::is_ascii_alnum(static_cast<unsigned char>(c))) {
                current.push_back(text::to_lower_ascii(c));
            } else if (!current.empty()) {
                out.insert(current);
                current.clear();
            }
        }
        if (!current.empty()) out.insert(current);
        return out;
    };
    return text::jaccard(toks(a), toks(b));
}

/// Sentence split on ". " so decimal values ("6.1 in") survive intact.
std::vector<std::string> split_sentences(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(". ", start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 2;
    }
}

/// "key: value" statements in free text; one candidate pair per sentence.
std::vector<std::pair<std::string, std::string>> scan_pairs(std::string_view body) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& line : text::split(std::string(body), '\n')) {
        for (const auto& segment : split_sentences(line)) {
            std::size_t colon = segment.find(':');
            if (colon == std::string::npos) continue;
            std::string key = text::collapse_whitespace(segment.substr(0, colon));
            std::string value = text::collapse_whitespace(segment.substr(colon + 1));
            while (!value.empty() && (value.back() == '.' || value.back() == ';')) {
                value.pop_back();
            }
            if (key.empty() || value.empty() || key.size() > 40) continue;
            if (text::name_tokens(text::lower(key)).size() > 5) continue;
            pairs.emplace_back(std::move(key), std::move(value));
        }
    }
    return pairs;
}

const std::vector<std::pair<const char*, const char*>> kSuperPool = {
    {"brand", "manufacturer or brand name"},
    {"model", "model name or number"},
    {"color", "primary color"},
    {"material", "main material"},
    {"dimensions", "overall physical dimensions"},
    {"weight", "item weight"},
    {"style", "design style"},
    {"country of origin", "where the product is made"},
    {"warranty", "warranty coverage"},
    {"power source", "how the product is powered"},
    {"capacity", "holding or storage capacity"},
    {"intended use", "primary intended use"},
};

const std::vector<std::pair<const char*, const char*>> kSubPool = {
    {"size", "product size"},
    {"connectivity", "supported connection methods"},
    {"compatibility", "compatible systems or devices"},
    {"resolution", "display or capture resolution"},
    {"battery life", "battery runtime"},
    {"piece count", "number of pieces included"},
    {"age range", "recommended age range"},
    {"scent", "fragrance"},
    {"pattern", "visual pattern"},
    {"finish", "surface finish"},
    {"voltage", "operating voltage"},
    {"mount type", "mounting mechanism"},
    {"fabric type", "fabric composition"},
    {"care instructions", "cleaning and care"},
};

}  // namespace

Json HeuristicProvider::generate(const std::string& prompt, const ResponseSchema& schema) {
    if (schema.name == "classify") return classify(prompt);
    if (schema.name == "schema_gen") return schema_gen(prompt);
    if (schema.name == "extract") return extract(prompt);
    if (schema.name == "rank_scores") {
        return prompt.find("Query attributes:") != std::string::npos ? rank_graph(prompt)
                                                                     : rank_raw(prompt);
    }
    if (schema.name == "judge") return judge(prompt);
    throw ProviderError(ProviderError::Kind::validation,
                        "heuristic provider does not understand schema '" + schema.name + "'");
}

Json HeuristicProvider::classify(const std::string& prompt) const {
    std::string_view body = after(prompt, "Product:\n");

    // Embedded category hint wins: "Category: Super > Sub".
    for (const auto& line : text::split(std::string(body), '\n')) {
        std::string lower = text::lower(line);
        std::size_t pos = lower.find("category:");
        if (pos == std::string::npos) continue;
        std::string rest(text::trim(std::string_view(line).substr(pos + 9)));
        if (rest.empty()) continue;
        if (!rest.empty() && rest.back() == '.') rest.pop_back();
        std::size_t sep = rest.find('>');
        std::string super = text::collapse_whitespace(sep == std::string::npos
                                                          ? rest
                                                          : rest.substr(0, sep));
        std::string sub = sep == std::string::npos
                              ? std::string{}
                              : text::collapse_whitespace(rest.substr(sep + 1));
        if (!super.empty()) return Json{{"super", super}, {"sub", sub}};
    }

    std::string supers_line(text::trim(first_line(after(prompt, "Known super-categories: "))));
    if (supers_line.empty() || supers_line == "(none)") {
        return Json{{"super", "unclassified"}, {"sub", ""}};
    }
    auto supers = text::split(supers_line, ',');
    std::size_t pick = fnv1a64(body) % supers.size();
    return Json{{"super", std::string(text::trim(supers[pick]))}, {"sub", "general"}};
}

Json HeuristicProvider::schema_gen(const std::string& prompt) const {
    std::string category(text::trim(first_line(after(prompt, "Category: "))));
    std::string level(text::trim(first_line(after(prompt, "Level: "))));
    std::string inherited_line(
        text::trim(first_line(after(prompt, "Already defined at the broader level: "))));

    std::set<std::string> inherited;
    if (inherited_line != "(none)") {
        for (const auto& name : text::split(inherited_line, ',')) {
            inherited.insert(text::normalize_name(name));
        }
    }

    const auto& pool = level == "sub" ? kSubPool : kSuperPool;
    std::uint64_t h = fnv1a64(category);
    std::size_t count = (level == "sub" ? 6 : 8) + h % 3;
    std::size_t offset = (h >> 8) % pool.size();

    Json out = Json::array();
    for (std::size_t i = 0; i < pool.size() && out.size() < count; ++i) {
        const auto& [name, desc] = pool[(offset + i) % pool.size()];
        if (inherited.count(name) > 0) continue;
        out.push_back(Json{{"name", name}, {"description", desc}});
    }
    return out;
}

Json HeuristicProvider::extract(const std::string& prompt) const {
    std::string_view attr_section = before(
        after(prompt, "Attributes to extract (with hints):\n"), "\nYou may also report");
    std::string_view body = after(prompt, "Product text:\n");

    // requested normalized name -> requested spelling
    std::map<std::string, std::string> requested;
    for (const auto& line : text::split(std::string(attr_section), '\n')) {
        std::string_view t = text::trim(line);
        if (!t.starts_with("- ")) continue;
        std::string name(text::trim(before(t.substr(2), ":")));
        if (!name.empty()) requested[text::normalize_name(name)] = name;
    }

    Json out = Json::object();
    std::size_t extras = 0;
    for (const auto& [key, value] : scan_pairs(body)) {
        std::string norm = text::normalize_name(key);
        auto it = requested.find(norm);
        if (it != requested.end()) {
            if (!out.contains(it->second)) out[it->second] = value;
        } else if (extras < 5 && !norm.empty() && !out.contains(norm)) {
            out[norm] = value;
            ++extras;
        }
    }
    return out;
}

Json HeuristicProvider::rank_graph(const std::string& prompt) const {
    Json scores = Json::array();
    std::string_view rest = after(prompt, "Candidates:\n");
    while (true) {
        std::size_t start = rest.find("### candidate ");
        if (start == std::string_view::npos) break;
        rest = rest.substr(start + 14);
        std::string id(text::trim(first_line(rest)));

        std::size_t block_end = rest.find("### candidate ");
        std::string_view block = block_end == std::string_view::npos
                                     ? rest
                                     : rest.substr(0, block_end);

        double credit = 0.0;
        std::size_t triples = 0;
        for (const auto& line : text::split(std::string(block), '\n')) {
            std::string_view t = text::trim(line);
            if (!t.starts_with("- ") || t.find(": query=") == std::string_view::npos) continue;
            std::size_t qpos = t.find(": query=") + 8;
            auto query_value = parse_json_string_at(t, qpos);
            if (!query_value) continue;
            ++triples;
            std::size_t cpos = t.find(" | candidate=", qpos);
            if (cpos == std::string_view::npos) continue;
            cpos += 13;
            if (t.substr(cpos).starts_with("[absent]")) continue;
            auto cand_value = parse_json_string_at(t, cpos);
            if (cand_value) credit += value_credit(*query_value, *cand_value);
        }
        int score = triples == 0 ? 0 : round_half_up(100.0 * credit / triples);
        scores.push_back(Json{{"id", id}, {"score", score}});
        if (block_end == std::string_view::npos) break;
        rest = rest.substr(block_end);
    }
    return Json{{"scores", std::move(scores)}};
}

Json HeuristicProvider::rank_raw(const std::string& prompt) const {
    std::string_view query_text = before(after(prompt, "Query product:\n"), "\nCandidates:");

    Json scores = Json::array();
    std::string_view rest = after(prompt, "Candidates:\n");
    while (true) {
        std::size_t start = rest.find("### candidate ");
        if (start == std::string_view::npos) break;
        rest = rest.substr(start + 14);
        std::string id(text::trim(first_line(rest)));
        std::size_t block_end = rest.find("### candidate ");
        std::string_view block = block_end == std::string_view::npos
                                     ? rest
                                     : rest.substr(0, block_end);
        std::string_view body = after(block, "\n");
        scores.push_back(
            Json{{"id", id}, {"score", round_half_up(100.0 * token_jaccard(query_text, body))}});
        if (block_end == std::string_view::npos) break;
        rest = rest.substr(block_end);
    }
    return Json{{"scores", std::move(scores)}};
}

Json HeuristicProvider::judge(const std::string& prompt) const {
    std::string_view query_block = before(after(prompt, "Query product:\n"),
                                          "\nCandidate product:");
    std::string_view cand_block = after(prompt, "Candidate product:\n");

    auto parse_block = [](std::string_view block) {
        std::map<std::string, std::string> attrs;
        std::string title;
        for (const auto& line : text::split(std::string(block), '\n')) {
            std::string_view t = text::trim(line);
            if (t.starts_with("title: ")) {
                std::size_t pos = 7;
                if (auto v = parse_json_string_at(t, pos)) title = *v;
                continue;
            }
            if (!t.starts_with("- ")) continue;
            std::size_t pos = 2;
            auto name = parse_json_string_at(t, pos);
            if (!name || pos + 2 > t.size() || t.substr(pos, 2) != ": ") continue;
            pos += 2;
            auto value = parse_json_string_at(t, pos);
            if (value) attrs[*name] = *value;
        }
        return std::make_pair(title, attrs);
    };

    auto [query_title, query_attrs] = parse_block(query_block);
    auto [cand_title, cand_attrs] = parse_block(cand_block);

    double attr_overlap = 0.0;
    if (!query_attrs.empty()) {
        double credit = 0.0;
        for (const auto& [name, qv] : query_attrs) {
            auto it = cand_attrs.find(name);
            if (it != cand_attrs.end()) credit += value_credit(qv, it->second);
        }
        attr_overlap = credit / static_cast<double>(query_attrs.size());
    }
    double title_sim = token_jaccard(query_title, cand_title);
    return Json{{"score", round_half_up(100.0 * (0.7 * attr_overlap + 0.3 * title_sim))}};
}

}  // namespace graphrank::provider
