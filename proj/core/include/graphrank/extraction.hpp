#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "graphrank/catalog.hpp"
#include "graphrank/json_util.hpp"
#include "graphrank/prompts.hpp"
#include "graphrank/provider.hpp"
#include "graphrank/schema.hpp"

namespace graphrank::extraction {

struct AttributeSet {
    std::string product_id;
    std::map<std::string, std::string> pairs;  // canonical name -> trimmed value
    std::set<std::string> discovered;          // keys not in the schema; subset of pairs' keys
    int schema_version = 0;
    std::string extracted_at;  // in-memory only; never persisted

    Json to_json() const;
    static AttributeSet from_json(const Json& row);
};

/// Cache of extractions keyed by product id. One entry per product;
/// put() replaces atomically. Concurrent readers see complete entries.
class AttributeStore {
  public:
    AttributeStore() = default;
    AttributeStore(AttributeStore&& other) noexcept;
    AttributeStore& operator=(AttributeStore&& other) noexcept;
    AttributeStore(const AttributeStore&) = delete;
    AttributeStore& operator=(const AttributeStore&) = delete;

    std::optional<AttributeSet> find(const std::string& product_id) const;
    void put(AttributeSet set);
    std::size_t size() const;
    std::vector<std::string> ids() const;

    /// JSONL sorted by product_id; deterministic bytes for identical content.
    void save(const std::filesystem::path& path) const;
    static AttributeStore load(const std::filesystem::path& path);

  private:
    mutable std::shared_mutex mu_;
    std::map<std::string, AttributeSet> entries_;
};

/// Values the provider uses to signal "no value"; dropped from pairs.
bool is_missing_value(std::string_view trimmed);

/// One provider round-trip for one product. Keys are canonicalized through
/// the registry alias table; keys outside the schema are kept as discovered
/// attributes; empty and sentinel values are dropped.
AttributeSet extract_attributes(const catalog::ProductRecord& record,
                                const std::vector<schema::AttributeDef>& schema_defs,
                                provider::ModelProvider& provider,
                                const schema::SchemaService& schemas, int schema_version,
                                const prompts::PromptLibrary& prompts,
                                const provider::ProviderSettings& settings = {},
                                provider::TranscriptLog* log = nullptr);

struct BatchReport {
    std::size_t attempted = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::size_t skipped_cached = 0;
    std::vector<std::pair<std::string, std::string>> failures;  // (product_id, reason)

    double failure_ratio() const {
        return attempted == 0 ? 0.0 : static_cast<double>(failed) / static_cast<double>(attempted);
    }
    Json to_json() const;
};

/// Extracts every product lacking a cache entry at the current schema
/// version, fanning out across `parallelism` workers. Per-product failures
/// are isolated and reported; the batch always completes. Schemas for every
/// category present are generated up front so the version is stable across
/// the run (which makes an immediate rerun a no-op).
BatchReport extract_batch(const catalog::ProductStore& store, schema::SchemaService& schemas,
                          provider::ModelProvider& provider, AttributeStore& attribute_store,
                          std::size_t parallelism, const prompts::PromptLibrary& prompts,
                          const provider::ProviderSettings& settings = {},
                          provider::TranscriptLog* log = nullptr);

/// Online path: cache hit at the current schema version returns the stored
/// set; a miss extracts, stores, then returns. Unknown ids throw NotFoundError.
AttributeSet get_or_extract(const std::string& product_id, const catalog::ProductStore& store,
                            schema::SchemaService& schemas, provider::ModelProvider& provider,
                            AttributeStore& attribute_store,
                            const prompts::PromptLibrary& prompts,
                            const provider::ProviderSettings& settings = {},
                            provider::TranscriptLog* log = nullptr);

}  // namespace graphrank::extraction
