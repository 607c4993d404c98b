#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "graphrank/json_util.hpp"

namespace graphrank::catalog {

struct ProductRecord {
    std::string product_id;
    std::string title;
    std::string description;
    std::vector<std::string> bullets;
    std::string super_category;  // empty = not yet classified
    std::string sub_category;    // empty = not yet classified
    std::string locale;

    /// Category filtering and schema resolution key off the sub-category.
    bool has_category() const { return !sub_category.empty(); }

    /// "super" or "super/sub"; empty when unclassified.
    std::string category_path() const;

    Json to_json() const;
    static ProductRecord from_json(const Json& row);

    bool operator==(const ProductRecord&) const = default;
};

/// Concatenated text view fed to retrieval and the raw ranker: title,
/// description, bullets joined by single newlines, empty fields skipped.
std::string product_text(const ProductRecord& record);

struct IngestReport {
    std::size_t loaded = 0;
    std::size_t rejected_rows = 0;
    std::size_t duplicates_dropped = 0;

    Json to_json() const;
};

enum class Format { jsonl, tsv };

/// Immutable after construction; safe for concurrent reads.
class ProductStore {
  public:
    ProductStore() = default;

    /// Builds a store from records, keeping the first occurrence of each id.
    /// Records with empty id or title are skipped. Counts go to `report`.
    static ProductStore from_records(std::vector<ProductRecord> records,
                                     IngestReport* report = nullptr);

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    bool contains(const std::string& product_id) const { return records_.count(product_id) > 0; }

    /// Throws NotFoundError for unknown ids.
    const ProductRecord& get(const std::string& product_id) const;

    /// Ids in ascending order; the deterministic iteration order everywhere.
    const std::vector<std::string>& ids() const { return ids_; }

    /// category path -> sorted product ids. Unclassified records are absent.
    const std::map<std::string, std::vector<std::string>>& category_index() const {
        return category_index_;
    }

    /// Recomputes the index from records (property: identical to the stored one).
    std::map<std::string, std::vector<std::string>> rebuild_index() const;

    void save(const std::filesystem::path& path) const;

  private:
    std::map<std::string, ProductRecord> records_;
    std::vector<std::string> ids_;
    std::map<std::string, std::vector<std::string>> category_index_;
};

struct LoadResult {
    ProductStore store;
    IngestReport report;
};

/// JSONL rows: {"product_id","title","description","bullets",...}.
/// TSV columns: product_id, title, description, bullets (U+2016-joined),
/// category ("Super" or "Super/Sub"). Malformed rows are rejected row-level,
/// never fatally; an unreadable file throws IoError.
LoadResult load_catalog(const std::filesystem::path& path, Format format);

struct FilterPolicy {
    std::set<std::string> excluded_category_names;
    std::size_t min_category_size = 500;
};

struct FilterReport {
    std::size_t removed_excluded = 0;
    std::size_t removed_small = 0;
    std::size_t uncategorized_kept = 0;
};

/// Drops products whose sub-category name is excluded or whose (super, sub)
/// group is smaller than min_category_size. Records without a sub-category
/// are kept unconditionally and counted in the report.
ProductStore filter_categories(const ProductStore& store, const FilterPolicy& policy,
                               FilterReport* report = nullptr);

}  // namespace graphrank::catalog
