#pragma once

#include <compare>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "graphrank/catalog.hpp"
#include "graphrank/json_util.hpp"
#include "graphrank/prompts.hpp"
#include "graphrank/provider.hpp"

namespace graphrank::schema {

enum class Level { super_level, sub_level };
enum class Origin { generated, curated };

struct AttributeDef {
    std::string canonical_name;  // normalized; never listed in aliases
    std::set<std::string> aliases;
    Level level = Level::super_level;
    std::string description;  // short hint fed to extraction prompts

    bool operator==(const AttributeDef&) const = default;
};

struct CategoryPath {
    std::string super;
    std::string sub;  // empty = super-level path

    bool has_sub() const { return !sub.empty(); }
    CategoryPath super_only() const { return {super, {}}; }
    std::string str() const { return sub.empty() ? super : super + "/" + sub; }

    auto operator<=>(const CategoryPath&) const = default;
};

struct CategorySchema {
    CategoryPath path;
    std::vector<AttributeDef> attributes;  // ordered; order is meaningful
    Origin origin = Origin::generated;
};

/// Registry of category schemas plus the alias table produced by
/// standardization. Mutations bump `version`, which keys extraction caches.
class SchemaRegistry {
  public:
    int version() const { return version_; }
    bool has(const CategoryPath& path) const { return schemas_.count(path) > 0; }
    const CategorySchema* find(const CategoryPath& path) const;
    bool has_super(const std::string& super) const;
    std::vector<std::string> super_categories() const;
    const std::map<CategoryPath, CategorySchema>& schemas() const { return schemas_; }
    const std::map<std::string, std::string>& alias_table() const { return alias_table_; }

    /// Validates invariants (unique names, no re-declaration of inherited
    /// names) and bumps the version. Replaces any existing schema at the path.
    void register_schema(CategorySchema schema);

    /// Records alias -> canonical (both normalized). Rejects aliases that are
    /// themselves canonical names of the table and self-mappings.
    void add_alias(const std::string& alias, const std::string& canonical);

    /// normalize + alias lookup; idempotent: canonical(canonical(x)) == canonical(x).
    std::string canonical(std::string_view raw) const;

    Json to_json() const;
    static SchemaRegistry from_json(const Json& j);
    void save(const std::filesystem::path& path) const;
    static SchemaRegistry load(const std::filesystem::path& path);

  private:
    friend struct StandardizeAccess;
    int version_ = 0;
    std::map<CategoryPath, CategorySchema> schemas_;
    std::map<std::string, std::string> alias_table_;
};

struct ClassifyResult {
    std::string super_category;
    std::string sub_category;
    bool is_new = false;  // (super, sub) not registered
};

/// Predicts a category pair for a record. Known predictions are mapped onto
/// the registered spelling; unknown ones come back verbatim with is_new set.
ClassifyResult classify_category(const catalog::ProductRecord& record,
                                 provider::ModelProvider& provider,
                                 const SchemaRegistry& registry,
                                 const prompts::PromptLibrary& prompts,
                                 const provider::ProviderSettings& settings = {},
                                 provider::TranscriptLog* log = nullptr);

/// Target attribute counts per level; soft limits, deviations are logged only.
constexpr std::size_t kSuperMinAttrs = 8, kSuperMaxAttrs = 10;
constexpr std::size_t kSubMinAttrs = 6, kSubMaxAttrs = 8;

/// Generates a schema for the path (sub-level when path.has_sub()). Names are
/// normalized; duplicates in the payload and names inherited from the super
/// schema are dropped. Does not register the result.
CategorySchema generate_schema(const CategoryPath& path, provider::ModelProvider& provider,
                               const SchemaRegistry& registry,
                               const prompts::PromptLibrary& prompts,
                               const provider::ProviderSettings& settings = {},
                               provider::TranscriptLog* log = nullptr);

struct MergeSuggestion {
    std::vector<std::string> names;  // sorted pair
    double similarity = 0.0;

    Json to_json() const { return Json{{"names", names}, {"similarity", similarity}}; }
};

struct StandardizeResult {
    std::size_t merges = 0;
    std::vector<MergeSuggestion> suggestions;
};

/// Clusters attribute names and merges within-cluster variants: two names
/// auto-merge when their token-set Jaccard is >= 0.5 and they share the same
/// last token; the most frequent name (ties: lexicographically smallest)
/// becomes canonical and the rest become aliases. Same-head pairs below the
/// threshold are emitted as suggestions for manual curation. Entries in
/// `manual_aliases` merge unconditionally and take precedence.
StandardizeResult standardize(SchemaRegistry& registry,
                              const std::map<std::string, std::string>& manual_aliases = {});

void save_suggestions(const std::vector<MergeSuggestion>& suggestions,
                      const std::filesystem::path& path);
std::map<std::string, std::string> load_manual_aliases(const std::filesystem::path& path);

struct ResolvedSchema {
    std::vector<AttributeDef> defs;  // super-level defs first, then sub-level
    bool needs_generation = false;

    std::vector<std::string> names() const;
};

ResolvedSchema resolve_schema(const SchemaRegistry& registry, const CategoryPath& path);

/// Thread-safe facade over a registry: concurrent reads, serialized writes,
/// and single-flight on-the-fly generation so concurrent queries for the same
/// unseen category trigger exactly one provider round-trip.
class SchemaService {
  public:
    SchemaService(SchemaRegistry registry, provider::ModelProvider& provider,
                  const prompts::PromptLibrary& prompts,
                  provider::ProviderSettings settings = {},
                  provider::TranscriptLog* log = nullptr);

    ResolvedSchema resolve(const CategoryPath& path) const;
    /// resolve(), generating and registering missing schemas first.
    ResolvedSchema resolve_or_generate(const CategoryPath& path);

    std::string canonical(std::string_view raw) const;
    int version() const;
    /// Snapshot copy for persistence; cheap at registry scale.
    SchemaRegistry snapshot() const;
    void register_schema(CategorySchema schema);
    StandardizeResult standardize(const std::map<std::string, std::string>& manual = {});

  private:
    void generate_missing(const CategoryPath& path);

    mutable std::shared_mutex registry_mu_;
    SchemaRegistry registry_;
    provider::ModelProvider& provider_;
    const prompts::PromptLibrary& prompts_;
    provider::ProviderSettings settings_;
    provider::TranscriptLog* log_;

    std::mutex flight_mu_;
    std::condition_variable flight_cv_;
    std::set<CategoryPath> in_flight_;
};

}  // namespace graphrank::schema
