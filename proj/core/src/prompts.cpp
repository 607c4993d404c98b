#include "graphrank/prompts.hpp"

#include "graphrank/errors.hpp"
#include "graphrank/json_util.hpp"
#include "graphrank/text.hpp"

namespace graphrank::prompts {

namespace {

constexpr const char* kClassify = R"(Classify the following retail product into a two-level category hierarchy.
Known super-categories: {{supers}}
Pick the best matching super-category from the known list when one fits; otherwise propose a new one.
Always propose the most specific sub-category you can.
Respond with a JSON object {"super": "...", "sub": "..."}.

Product:
{{text}})";

constexpr const char* kSchemaGen = R"(You are defining an attribute schema for a retail product category.
Category: {{category}}
Level: {{level}}
Already defined at the broader level: {{inherited}}
List the {{count_range}} attributes most useful for comparing products in this category.
Do not repeat attributes already defined at the broader level.
Respond with a JSON array of objects {"name": "...", "description": "..."}.)";

constexpr const char* kExtract = R"(Extract attribute values from the product text below.
Report only values that appear in the text; never infer or invent values.
Attributes to extract (with hints):
{{attributes}}
You may also report additional attributes that are clearly stated in the text.
Respond with a single JSON object mapping attribute names to string values.

Product text:
{{text}})";

constexpr const char* kRankGraph = R"(You are ranking candidate products by how similar they are to a query product.
Compare attribute values: exact matches count most, compatible values count partially, and conflicting or missing values reduce similarity.
Score each candidate on a 0-100 scale where 0 is completely dissimilar and 100 is a perfect feature match.
Respond with a JSON object {"scores": [{"id": "...", "score": 0}]} listing every candidate exactly once.

Query attributes:
{{query_block}}

Candidates:
{{candidate_blocks}})";

constexpr const char* kRankRaw = R"(You are ranking candidate products by how similar they are to a query product, using their full product text.
Score each candidate on a 0-100 scale where 0 is completely dissimilar and 100 is a perfect match.
Respond with a JSON object {"scores": [{"id": "...", "score": 0}]} listing every candidate exactly once.

Query product:
{{query_text}}

Candidates:
{{candidate_blocks}})";

constexpr const char* kJudge = R"(Rate how well the candidate product could substitute for the query product.
Weigh attribute alignment and overall semantic similarity under a strict standard.
Respond with a JSON object {"score": 0} where 0 is completely dissimilar and 100 is a perfect match.

Query product:
{{query_block}}

Candidate product:
{{candidate_block}})";

}  // namespace

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    auto add = [&](const char* name, const char* body) {
        lib.templates_[name] = Template{name, "v1", body};
    };
    add("classify", kClassify);
    add("schema_gen", kSchemaGen);
    add("extract", kExtract);
    add("rank_graph", kRankGraph);
    add("rank_raw", kRankRaw);
    add("judge", kJudge);
    return lib;
}

void PromptLibrary::load_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("prompt directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".tmpl") continue;
        std::string content = read_file(entry.path());
        std::size_t eol = content.find('\n');
        std::string header = content.substr(0, eol == std::string::npos ? content.size() : eol);
        std::string_view version = text::trim(header);
        if (!version.starts_with("version:")) {
            throw ConfigError("prompt template missing 'version:' header: " +
                              entry.path().string());
        }
        version = text::trim(version.substr(8));
        if (version.empty()) {
            throw ConfigError("empty prompt version in " + entry.path().string());
        }
        std::string body = eol == std::string::npos ? "" : content.substr(eol + 1);
        while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
        std::string name = entry.path().stem().string();
        templates_[name] = Template{name, std::string(version), std::move(body)};
    }
}

const Template& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw NotFoundError("unknown prompt template: " + name);
    return it->second;
}

bool PromptLibrary::has(const std::string& name) const { return templates_.count(name) > 0; }

std::string PromptLibrary::render(const std::string& name,
                                  const std::map<std::string, std::string>& slots) const {
    const Template& tmpl = get(name);
    std::string out;
    out.reserve(tmpl.body.size());

    std::size_t pos = 0;
    while (pos < tmpl.body.size()) {
        std::size_t open = tmpl.body.find("{{", pos);
        if (open == std::string::npos) {
            out.append(tmpl.body, pos, std::string::npos);
            break;
        }
        out.append(tmpl.body, pos, open - pos);
        std::size_t close = tmpl.body.find("}}", open + 2);
        if (close == std::string::npos) {
            throw Error("unterminated placeholder in template " + name);
        }
        std::string slot = tmpl.body.substr(open + 2, close - open - 2);
        auto it = slots.find(slot);
        if (it == slots.end()) {
            throw Error("template " + name + " needs slot '" + slot + "'");
        }
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

}  // namespace graphrank::prompts
