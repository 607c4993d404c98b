#include "graphrank/extraction.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include "graphrank/errors.hpp"
#include "graphrank/response_schemas.hpp"
#include "graphrank/text.hpp"

namespace graphrank::extraction {

Json AttributeSet::to_json() const {
    return Json{{"product_id", product_id},
                {"schema_version", schema_version},
                {"pairs", pairs},
                {"discovered", std::vector<std::string>(discovered.begin(), discovered.end())}};
}

AttributeSet AttributeSet::from_json(const Json& row) {
    AttributeSet set;
    set.product_id = row.at("product_id").get<std::string>();
    set.schema_version = row.at("schema_version").get<int>();
    for (const auto& [name, value] : row.at("pairs").items()) {
        set.pairs[name] = value.get<std::string>();
    }
    for (const auto& name : row.value("discovered", std::vector<std::string>{})) {
        set.discovered.insert(name);
    }
    return set;
}

AttributeStore::AttributeStore(AttributeStore&& other) noexcept {
    std::unique_lock lock(other.mu_);
    entries_ = std::move(other.entries_);
}

AttributeStore& AttributeStore::operator=(AttributeStore&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mu_, other.mu_);
        entries_ = std::move(other.entries_);
    }
    return *this;
}

std::optional<AttributeSet> AttributeStore::find(const std::string& product_id) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(product_id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void AttributeStore::put(AttributeSet set) {
    std::unique_lock lock(mu_);
    entries_[set.product_id] = std::move(set);
}

std::size_t AttributeStore::size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
}

std::vector<std::string> AttributeStore::ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [id, set] : entries_) {
        out.push_back(id);
        (void)set;
    }
    return out;
}

void AttributeStore::save(const std::filesystem::path& path) const {
    std::shared_lock lock(mu_);
    std::string out;
    for (const auto& [id, set] : entries_) {
        (void)id;
        out += dump_line(set.to_json());
        out += '\n';
    }
    write_file(path, out);
}

AttributeStore AttributeStore::load(const std::filesystem::path& path) {
    AttributeStore store;
    for_each_line(path, [&](std::size_t line, std::string_view text_line) {
        Json row = Json::parse(text_line, nullptr, false);
        if (row.is_discarded()) throw ParseError("bad attribute store row", line);
        store.entries_[row.at("product_id").get<std::string>()] = AttributeSet::from_json(row);
    });
    return store;
}

bool is_missing_value(std::string_view trimmed) {
    std::string lower = text::lower(trimmed);
    return lower.empty() || lower == "unknown" || lower == "n/a" || lower == "null";
}

namespace {

std::string value_to_string(const Json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
    return value.dump();  // numbers
}

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

AttributeSet extract_attributes(const catalog::ProductRecord& record,
                                const std::vector<schema::AttributeDef>& schema_defs,
                                provider::ModelProvider& prov,
                                const schema::SchemaService& schemas, int schema_version,
                                const prompts::PromptLibrary& prompts,
                                const provider::ProviderSettings& settings,
                                provider::TranscriptLog* log) {
    std::vector<std::string> attr_lines;
    std::set<std::string> schema_names;
    for (const auto& def : schema_defs) {
        schema_names.insert(def.canonical_name);
        attr_lines.push_back("- " + def.canonical_name +
                             (def.description.empty() ? "" : ": " + def.description));
    }
    if (attr_lines.empty()) attr_lines.push_back("(no predefined attributes)");

    std::string prompt = prompts.render("extract", {{"attributes", text::join(attr_lines, "\n")},
                                                    {"text", catalog::product_text(record)}});

    auto result = provider::generate_structured(prov, prompt, provider::schemas::extraction(),
                                                settings, log);

    AttributeSet set;
    set.product_id = record.product_id;
    set.schema_version = schema_version;
    set.extracted_at = now_iso8601();

    // nlohmann objects iterate key-sorted, so collisions resolve deterministically.
    for (const auto& [raw_key, raw_value] : result.payload.items()) {
        if (raw_value.is_null()) continue;
        std::string value = text::collapse_whitespace(value_to_string(raw_value));
        if (is_missing_value(value)) continue;
        std::string key = schemas.canonical(raw_key);
        if (key.empty()) continue;
        if (set.pairs.count(key) > 0) continue;  // first occurrence wins
        set.pairs[key] = value;
        if (schema_names.count(key) == 0) set.discovered.insert(key);
    }
    return set;
}

BatchReport extract_batch(const catalog::ProductStore& store, schema::SchemaService& schemas,
                          provider::ModelProvider& prov, AttributeStore& attribute_store,
                          std::size_t parallelism, const prompts::PromptLibrary& prompts,
                          const provider::ProviderSettings& settings,
                          provider::TranscriptLog* log) {
    if (parallelism < 1) throw Error("parallelism must be >= 1");

    // Pre-generate every schema so the version is pinned for the whole run.
    std::set<schema::CategoryPath> paths;
    for (const auto& id : store.ids()) {
        const auto& rec = store.get(id);
        if (!rec.super_category.empty()) {
            paths.insert({rec.super_category, rec.sub_category});
        }
    }
    for (const auto& path : paths) schemas.resolve_or_generate(path);
    const int version = schemas.version();

    std::vector<std::string> todo;
    BatchReport report;
    for (const auto& id : store.ids()) {
        auto cached = attribute_store.find(id);
        if (cached && cached->schema_version == version) {
            ++report.skipped_cached;
        } else {
            todo.push_back(id);
        }
    }
    report.attempted = todo.size();

    std::mutex report_mu;
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        while (true) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= todo.size()) return;
            const auto& rec = store.get(todo[i]);
            try {
                auto resolved = rec.super_category.empty()
                                    ? schema::ResolvedSchema{}
                                    : schemas.resolve({rec.super_category, rec.sub_category});
                AttributeSet set = extract_attributes(rec, resolved.defs, prov, schemas, version,
                                                      prompts, settings, log);
                attribute_store.put(std::move(set));
                std::lock_guard lock(report_mu);
                ++report.succeeded;
            } catch (const std::exception& e) {
                std::lock_guard lock(report_mu);
                ++report.failed;
                report.failures.emplace_back(rec.product_id, e.what());
            }
        }
    };

    std::size_t workers = std::min<std::size_t>(parallelism, std::max<std::size_t>(todo.size(), 1));
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    std::sort(report.failures.begin(), report.failures.end());
    return report;
}

AttributeSet get_or_extract(const std::string& product_id, const catalog::ProductStore& store,
                            schema::SchemaService& schemas, provider::ModelProvider& prov,
                            AttributeStore& attribute_store,
                            const prompts::PromptLibrary& prompts,
                            const provider::ProviderSettings& settings,
                            provider::TranscriptLog* log) {
    const auto& rec = store.get(product_id);  // throws NotFoundError

    if (auto cached = attribute_store.find(product_id);
        cached && cached->schema_version == schemas.version()) {
        return *cached;
    }

    schema::ResolvedSchema resolved;
    if (!rec.super_category.empty()) {
        resolved = schemas.resolve_or_generate({rec.super_category, rec.sub_category});
    }
    AttributeSet set = extract_attributes(rec, resolved.defs, prov, schemas, schemas.version(),
                                          prompts, settings, log);
    attribute_store.put(set);
    return set;
}

Json BatchReport::to_json() const {
    Json fails = Json::array();
    for (const auto& [id, reason] : failures) {
        fails.push_back(Json{{"product_id", id}, {"reason", reason}});
    }
    return Json{{"attempted", attempted},     {"succeeded", succeeded},
                {"failed", failed},           {"skipped_cached", skipped_cached},
                {"failures", std::move(fails)}};
}

}  // namespace graphrank::extraction
