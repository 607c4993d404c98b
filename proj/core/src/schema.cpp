#include "graphrank/schema.hpp"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

#include "graphrank/errors.hpp"
#include "graphrank/response_schemas.hpp"
#include "graphrank/text.hpp"

namespace graphrank::schema {

namespace {

std::string level_str(Level level) {
    return level == Level::super_level ? "super" : "sub";
}

Level level_from(const std::string& s) {
    if (s == "super") return Level::super_level;
    if (s == "sub") return Level::sub_level;
    throw ParseError("unknown attribute level: " + s);
}

}  // namespace

const CategorySchema* SchemaRegistry::find(const CategoryPath& path) const {
    auto it = schemas_.find(path);
    return it == schemas_.end() ? nullptr : &it->second;
}

bool SchemaRegistry::has_super(const std::string& super) const {
    return schemas_.count(CategoryPath{super, {}}) > 0;
}

std::vector<std::string> SchemaRegistry::super_categories() const {
    std::vector<std::string> supers;
    for (const auto& [path, schema] : schemas_) {
        (void)schema;
        if (!path.has_sub()) supers.push_back(path.super);
    }
    return supers;
}

void SchemaRegistry::register_schema(CategorySchema schema) {
    const CategorySchema* super_schema =
        schema.path.has_sub() ? find(schema.path.super_only()) : nullptr;

    std::set<std::string> inherited;
    if (super_schema) {
        for (const auto& def : super_schema->attributes) inherited.insert(def.canonical_name);
    }

    std::set<std::string> seen;
    std::vector<AttributeDef> kept;
    for (auto& def : schema.attributes) {
        def.canonical_name = text::normalize_name(def.canonical_name);
        if (def.canonical_name.empty()) continue;
        def.aliases.erase(def.canonical_name);
        if (!seen.insert(def.canonical_name).second) {
            throw Error("duplicate attribute '" + def.canonical_name + "' in schema " +
                        schema.path.str());
        }
        if (inherited.count(def.canonical_name) > 0) continue;  // inheritance supplies it
        kept.push_back(std::move(def));
    }
    schema.attributes = std::move(kept);
    schemas_[schema.path] = std::move(schema);
    ++version_;
}

void SchemaRegistry::add_alias(const std::string& alias, const std::string& canonical) {
    std::string a = text::normalize_name(alias);
    std::string c = text::normalize_name(canonical);
    if (a.empty() || c.empty() || a == c) {
        throw Error("bad alias mapping: '" + alias + "' -> '" + canonical + "'");
    }
    auto it = alias_table_.find(a);
    if (it != alias_table_.end() && it->second != c) {
        throw Error("alias '" + a + "' already maps to '" + it->second + "'");
    }
    if (it != alias_table_.end()) return;  // same mapping, no-op
    alias_table_[a] = c;
    ++version_;
}

std::string SchemaRegistry::canonical(std::string_view raw) const {
    std::string n = text::normalize_name(raw);
    auto it = alias_table_.find(n);
    return it == alias_table_.end() ? n : it->second;
}

Json SchemaRegistry::to_json() const {
    Json schemas = Json::array();
    for (const auto& [path, schema] : schemas_) {
        Json attrs = Json::array();
        for (const auto& def : schema.attributes) {
            attrs.push_back(Json{{"name", def.canonical_name},
                                 {"aliases", std::vector<std::string>(def.aliases.begin(),
                                                                      def.aliases.end())},
                                 {"level", level_str(def.level)},
                                 {"description", def.description}});
        }
        schemas.push_back(Json{{"super", path.super},
                               {"sub", path.sub},
                               {"origin", schema.origin == Origin::curated ? "curated"
                                                                           : "generated"},
                               {"attributes", std::move(attrs)}});
    }
    return Json{{"version", version_}, {"schemas", std::move(schemas)},
                {"alias_table", alias_table_}};
}

SchemaRegistry SchemaRegistry::from_json(const Json& j) {
    SchemaRegistry reg;
    if (!j.is_object() || !j.contains("version") || !j.contains("schemas")) {
        throw ParseError("bad registry file: expected {version, schemas, alias_table}");
    }
    for (const auto& s : j["schemas"]) {
        CategorySchema schema;
        schema.path = {s.at("super").get<std::string>(), s.value("sub", std::string{})};
        schema.origin = s.value("origin", std::string{"generated"}) == "curated"
                            ? Origin::curated
                            : Origin::generated;
        for (const auto& a : s.at("attributes")) {
            AttributeDef def;
            def.canonical_name = a.at("name").get<std::string>();
            def.level = level_from(a.value("level", std::string{"super"}));
            def.description = a.value("description", std::string{});
            for (const auto& alias : a.value("aliases", std::vector<std::string>{})) {
                def.aliases.insert(alias);
            }
            schema.attributes.push_back(std::move(def));
        }
        reg.schemas_[schema.path] = std::move(schema);
    }
    if (j.contains("alias_table")) {
        for (const auto& [alias, canon] : j["alias_table"].items()) {
            reg.alias_table_[alias] = canon.get<std::string>();
        }
    }
    reg.version_ = j["version"].get<int>();
    return reg;
}

void SchemaRegistry::save(const std::filesystem::path& path) const {
    write_file(path, to_json().dump(2) + "\n");
}

SchemaRegistry SchemaRegistry::load(const std::filesystem::path& path) {
    return from_json(parse_json(read_file(path), "registry " + path.string()));
}

ClassifyResult classify_category(const catalog::ProductRecord& record,
                                 provider::ModelProvider& prov, const SchemaRegistry& registry,
                                 const prompts::PromptLibrary& prompts,
                                 const provider::ProviderSettings& settings,
                                 provider::TranscriptLog* log) {
    if (record.title.empty()) throw Error("cannot classify a record without a title");

    auto supers = registry.super_categories();
    std::string prompt = prompts.render(
        "classify", {{"supers", supers.empty() ? "(none)" : text::join(supers, ", ")},
                     {"text", catalog::product_text(record)}});

    auto result =
        provider::generate_structured(prov, prompt, provider::schemas::classify(), settings, log);

    std::string pred_super = result.payload["super"].get<std::string>();
    std::string pred_sub = result.payload.value("sub", std::string{});

    ClassifyResult out{pred_super, pred_sub, true};

    // Map onto registered spellings when a normalized match exists.
    std::string norm_super = text::normalize_name(pred_super);
    for (const auto& super : supers) {
        if (text::normalize_name(super) == norm_super) {
            out.super_category = super;
            break;
        }
    }
    std::string norm_sub = text::normalize_name(pred_sub);
    for (const auto& [path, schema] : registry.schemas()) {
        (void)schema;
        if (path.super == out.super_category && path.has_sub() &&
            text::normalize_name(path.sub) == norm_sub) {
            out.sub_category = path.sub;
            break;
        }
    }
    out.is_new = !registry.has(CategoryPath{out.super_category, out.sub_category});
    return out;
}

CategorySchema generate_schema(const CategoryPath& path, provider::ModelProvider& prov,
                               const SchemaRegistry& registry,
                               const prompts::PromptLibrary& prompts,
                               const provider::ProviderSettings& settings,
                               provider::TranscriptLog* log) {
    if (path.super.empty()) throw Error("generate_schema needs a super-category");

    Level level = path.has_sub() ? Level::sub_level : Level::super_level;
    std::set<std::string> inherited;
    if (level == Level::sub_level) {
        if (const CategorySchema* super_schema = registry.find(path.super_only())) {
            for (const auto& def : super_schema->attributes) {
                inherited.insert(def.canonical_name);
            }
        }
    }

    std::string count_range = level == Level::super_level
                                  ? std::to_string(kSuperMinAttrs) + "-" + std::to_string(kSuperMaxAttrs)
                                  : std::to_string(kSubMinAttrs) + "-" + std::to_string(kSubMaxAttrs);
    std::string inherited_str =
        inherited.empty()
            ? "(none)"
            : text::join(std::vector<std::string>(inherited.begin(), inherited.end()), ", ");

    std::string prompt = prompts.render("schema_gen", {{"category", path.str()},
                                                       {"level", level_str(level)},
                                                       {"inherited", inherited_str},
                                                       {"count_range", count_range}});

    auto result = provider::generate_structured(prov, prompt, provider::schemas::schema_gen(),
                                                settings, log);

    CategorySchema schema;
    schema.path = path;
    schema.origin = Origin::generated;
    std::set<std::string> seen;
    for (const auto& item : result.payload) {
        std::string name = registry.canonical(item["name"].get<std::string>());
        if (name.empty() || !seen.insert(name).second) continue;
        if (inherited.count(name) > 0) continue;
        AttributeDef def;
        def.canonical_name = name;
        def.level = level;
        def.description = item.value("description", std::string{});
        schema.attributes.push_back(std::move(def));
    }

    std::size_t lo = level == Level::super_level ? kSuperMinAttrs : kSubMinAttrs;
    std::size_t hi = level == Level::super_level ? kSuperMaxAttrs : kSubMaxAttrs;
    if (schema.attributes.size() < lo || schema.attributes.size() > hi) {
        spdlog::warn("schema for {} has {} attributes (target {}-{})", path.str(),
                     schema.attributes.size(), lo, hi);
    }
    return schema;
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

/// Registry surgery shared by manual merges and cluster merges.
struct Merger {
    SchemaRegistry& registry;
    std::map<CategoryPath, CategorySchema>& schemas;
    std::map<std::string, std::string>& aliases;
    bool changed = false;

    void merge(const std::string& from, const std::string& to) {
        if (from == to || from.empty() || to.empty()) return;
        changed = true;

        for (auto& [path, schema] : schemas) {
            auto from_it = std::find_if(schema.attributes.begin(), schema.attributes.end(),
                                        [&](const AttributeDef& d) {
                                            return d.canonical_name == from;
                                        });
            if (from_it == schema.attributes.end()) continue;

            auto to_it = std::find_if(schema.attributes.begin(), schema.attributes.end(),
                                      [&](const AttributeDef& d) {
                                          return d.canonical_name == to;
                                      });
            if (to_it != schema.attributes.end()) {
                // Both spellings in one schema: fold 'from' into 'to'.
                to_it->aliases.insert(from);
                to_it->aliases.insert(from_it->aliases.begin(), from_it->aliases.end());
                to_it->aliases.erase(to);
                schema.attributes.erase(from_it);
            } else {
                from_it->aliases.insert(from);
                from_it->canonical_name = to;
                from_it->aliases.erase(to);
            }

            // A renamed sub-level def may now collide with an inherited name.
            if (path.has_sub()) {
                if (const CategorySchema* super_schema =
                        registry.find(path.super_only())) {
                    std::set<std::string> inherited;
                    for (const auto& d : super_schema->attributes) {
                        inherited.insert(d.canonical_name);
                    }
                    std::erase_if(schema.attributes, [&](const AttributeDef& d) {
                        return inherited.count(d.canonical_name) > 0;
                    });
                }
            }
        }

        aliases[from] = to;
        for (auto& [alias, canon] : aliases) {
            (void)alias;
            if (canon == from) canon = to;
        }
        std::erase_if(aliases, [](const auto& kv) { return kv.first == kv.second; });
    }
};

}  // namespace

// standardize edits registry internals directly; declared friend via accessor.
struct StandardizeAccess {
    static std::map<CategoryPath, CategorySchema>& schemas(SchemaRegistry& r) {
        return r.schemas_;
    }
    static std::map<std::string, std::string>& aliases(SchemaRegistry& r) {
        return r.alias_table_;
    }
    static void bump(SchemaRegistry& r) { ++r.version_; }
};

StandardizeResult standardize(SchemaRegistry& registry,
                              const std::map<std::string, std::string>& manual_aliases) {
    auto& schemas = StandardizeAccess::schemas(registry);
    auto& aliases = StandardizeAccess::aliases(registry);
    Merger merger{registry, schemas, aliases};
    StandardizeResult result;

    for (const auto& [alias, canon] : manual_aliases) {
        std::string a = text::normalize_name(alias);
        std::string c = text::normalize_name(canon);
        if (a.empty() || c.empty() || a == c) continue;
        merger.merge(a, c);
        ++result.merges;
    }

    // Name frequency = number of defs carrying the name across all schemas.
    std::map<std::string, std::size_t> freq;
    for (const auto& [path, schema] : schemas) {
        (void)path;
        for (const auto& def : schema.attributes) ++freq[def.canonical_name];
    }

    // Candidate clusters: names sharing a head noun (last token).
    std::map<std::string, std::vector<std::string>> heads;
    for (const auto& [name, n] : freq) {
        (void)n;
        std::string head = text::last_token(name);
        if (!head.empty()) heads[head].push_back(name);
    }

    for (const auto& [head, names] : heads) {
        (void)head;
        if (names.size() < 2) continue;

        std::vector<std::set<std::string>> token_sets;
        token_sets.reserve(names.size());
        for (const auto& name : names) {
            auto toks = text::name_tokens(name);
            token_sets.emplace_back(toks.begin(), toks.end());
        }

        UnionFind uf(names.size());
        for (std::size_t i = 0; i < names.size(); ++i) {
            for (std::size_t j = i + 1; j < names.size(); ++j) {
                if (text::jaccard(token_sets[i], token_sets[j]) >= 0.5) uf.unite(i, j);
            }
        }

        std::map<std::size_t, std::vector<std::size_t>> clusters;
        for (std::size_t i = 0; i < names.size(); ++i) clusters[uf.find(i)].push_back(i);

        for (const auto& [root, members] : clusters) {
            (void)root;
            if (members.size() < 2) continue;
            std::size_t best = members[0];
            for (std::size_t m : members) {
                if (freq[names[m]] > freq[names[best]] ||
                    (freq[names[m]] == freq[names[best]] && names[m] < names[best])) {
                    best = m;
                }
            }
            for (std::size_t m : members) {
                if (m == best) continue;
                merger.merge(names[m], names[best]);
                ++result.merges;
            }
        }

        // Same head, not auto-merged: surface for manual curation.
        for (std::size_t i = 0; i < names.size(); ++i) {
            for (std::size_t j = i + 1; j < names.size(); ++j) {
                if (uf.find(i) == uf.find(j)) continue;
                MergeSuggestion s;
                s.names = {names[i], names[j]};
                std::sort(s.names.begin(), s.names.end());
                s.similarity = text::jaccard(token_sets[i], token_sets[j]);
                result.suggestions.push_back(std::move(s));
            }
        }
    }

    std::sort(result.suggestions.begin(), result.suggestions.end(),
              [](const MergeSuggestion& a, const MergeSuggestion& b) { return a.names < b.names; });

    if (merger.changed) StandardizeAccess::bump(registry);
    return result;
}

void save_suggestions(const std::vector<MergeSuggestion>& suggestions,
                      const std::filesystem::path& path) {
    Json arr = Json::array();
    for (const auto& s : suggestions) arr.push_back(s.to_json());
    write_file(path, arr.dump(2) + "\n");
}

std::map<std::string, std::string> load_manual_aliases(const std::filesystem::path& path) {
    Json j = parse_json(read_file(path), "alias file " + path.string());
    if (!j.is_object()) throw ParseError("alias file must be a JSON object alias->canonical");
    std::map<std::string, std::string> out;
    for (const auto& [alias, canon] : j.items()) out[alias] = canon.get<std::string>();
    return out;
}

std::vector<std::string> ResolvedSchema::names() const {
    std::vector<std::string> out;
    out.reserve(defs.size());
    for (const auto& def : defs) out.push_back(def.canonical_name);
    return out;
}

ResolvedSchema resolve_schema(const SchemaRegistry& registry, const CategoryPath& path) {
    ResolvedSchema resolved;
    const CategorySchema* super_schema = registry.find(CategoryPath{path.super, {}});
    if (!super_schema) {
        resolved.needs_generation = true;
        return resolved;
    }
    resolved.defs = super_schema->attributes;
    if (!path.has_sub()) return resolved;

    const CategorySchema* sub_schema = registry.find(path);
    if (!sub_schema) {
        resolved.needs_generation = true;
        return resolved;
    }
    resolved.defs.insert(resolved.defs.end(), sub_schema->attributes.begin(),
                         sub_schema->attributes.end());
    return resolved;
}

SchemaService::SchemaService(SchemaRegistry registry, provider::ModelProvider& prov,
                             const prompts::PromptLibrary& prompts,
                             provider::ProviderSettings settings, provider::TranscriptLog* log)
    : registry_(std::move(registry)), provider_(prov), prompts_(prompts),
      settings_(settings), log_(log) {}

ResolvedSchema SchemaService::resolve(const CategoryPath& path) const {
    std::shared_lock lock(registry_mu_);
    return resolve_schema(registry_, path);
}

std::string SchemaService::canonical(std::string_view raw) const {
    std::shared_lock lock(registry_mu_);
    return registry_.canonical(raw);
}

int SchemaService::version() const {
    std::shared_lock lock(registry_mu_);
    return registry_.version();
}

SchemaRegistry SchemaService::snapshot() const {
    std::shared_lock lock(registry_mu_);
    return registry_;
}

void SchemaService::register_schema(CategorySchema schema) {
    std::unique_lock lock(registry_mu_);
    registry_.register_schema(std::move(schema));
}

StandardizeResult SchemaService::standardize(const std::map<std::string, std::string>& manual) {
    std::unique_lock lock(registry_mu_);
    return schema::standardize(registry_, manual);
}

ResolvedSchema SchemaService::resolve_or_generate(const CategoryPath& path) {
    ResolvedSchema resolved = resolve(path);
    if (!resolved.needs_generation) return resolved;
    generate_missing(path);
    return resolve(path);
}

void SchemaService::generate_missing(const CategoryPath& path) {
    if (path.super.empty()) throw Error("cannot generate a schema without a super-category");
    if (path.has_sub()) generate_missing(path.super_only());

    std::unique_lock flight(flight_mu_);
    flight_cv_.wait(flight, [&] { return in_flight_.count(path) == 0; });
    {
        std::shared_lock lock(registry_mu_);
        if (registry_.has(path)) return;  // another flight filled it
    }
    in_flight_.insert(path);
    flight.unlock();

    try {
        CategorySchema schema = generate_schema(path, provider_, snapshot(), prompts_,
                                                settings_, log_);
        {
            std::unique_lock lock(registry_mu_);
            if (!registry_.has(path)) registry_.register_schema(std::move(schema));
        }
    } catch (...) {
        flight.lock();
        in_flight_.erase(path);
        flight_cv_.notify_all();
        throw;
    }
    flight.lock();
    in_flight_.erase(path);
    flight_cv_.notify_all();
}

}  // namespace graphrank::schema
