#include "graphrank/catalog.hpp"

#include <algorithm>

#include "graphrank/errors.hpp"
#include "graphrank/text.hpp"

namespace graphrank::catalog {

namespace {
// Bullet separator in the TSV adapter: U+2016 DOUBLE VERTICAL LINE.
constexpr const char* kBulletSep = "\xe2\x80\x96";
}

std::string ProductRecord::category_path() const {
    if (super_category.empty()) return {};
    if (sub_category.empty()) return super_category;
    return super_category + "/" + sub_category;
}

Json ProductRecord::to_json() const {
    Json row{{"product_id", product_id}, {"title", title},
             {"description", description}, {"bullets", bullets},
             {"locale", locale}};
    if (!super_category.empty()) row["super_category"] = super_category;
    if (!sub_category.empty()) row["sub_category"] = sub_category;
    return row;
}

ProductRecord ProductRecord::from_json(const Json& row) {
    ProductRecord rec;
    auto str = [&](const char* key) -> std::string {
        auto it = row.find(key);
        if (it == row.end() || it->is_null()) return {};
        if (!it->is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
        return it->get<std::string>();
    };
    rec.product_id = str("product_id");
    rec.title = str("title");
    rec.description = str("description");
    rec.super_category = str("super_category");
    rec.sub_category = str("sub_category");
    rec.locale = str("locale");
    if (auto it = row.find("bullets"); it != row.end() && !it->is_null()) {
        if (!it->is_array()) throw ParseError("field 'bullets' must be an array");
        for (const auto& b : *it) {
            if (!b.is_string()) throw ParseError("bullets must be strings");
            rec.bullets.push_back(b.get<std::string>());
        }
    }
    return rec;
}

std::string product_text(const ProductRecord& record) {
    std::vector<std::string> parts;
    if (!record.title.empty()) parts.push_back(record.title);
    if (!record.description.empty()) parts.push_back(record.description);
    for (const auto& bullet : record.bullets) {
        if (!bullet.empty()) parts.push_back(bullet);
    }
    return text::join(parts, "\n");
}

Json IngestReport::to_json() const {
    return Json{{"loaded", loaded},
                {"rejected_rows", rejected_rows},
                {"duplicates_dropped", duplicates_dropped}};
}

ProductStore ProductStore::from_records(std::vector<ProductRecord> records, IngestReport* report) {
    ProductStore store;
    for (auto& rec : records) {
        if (rec.product_id.empty() || rec.title.empty()) {
            if (report) ++report->rejected_rows;
            continue;
        }
        auto [it, inserted] = store.records_.emplace(rec.product_id, std::move(rec));
        (void)it;
        if (!inserted) {
            if (report) ++report->duplicates_dropped;
            continue;
        }
        if (report) ++report->loaded;
    }
    store.ids_.reserve(store.records_.size());
    for (const auto& [id, rec] : store.records_) {
        store.ids_.push_back(id);
        (void)rec;
    }
    store.category_index_ = store.rebuild_index();
    return store;
}

const ProductRecord& ProductStore::get(const std::string& product_id) const {
    auto it = records_.find(product_id);
    if (it == records_.end()) throw NotFoundError("unknown product: " + product_id);
    return it->second;
}

std::map<std::string, std::vector<std::string>> ProductStore::rebuild_index() const {
    std::map<std::string, std::vector<std::string>> index;
    for (const auto& [id, rec] : records_) {
        std::string path = rec.category_path();
        if (!path.empty()) index[path].push_back(id);
    }
    // records_ is id-ordered, so each bucket is already sorted.
    return index;
}

void ProductStore::save(const std::filesystem::path& path) const {
    std::string out;
    for (const auto& id : ids_) {
        out += dump_line(records_.at(id).to_json());
        out += '\n';
    }
    write_file(path, out);
}

namespace {

std::vector<ProductRecord> parse_jsonl(const std::filesystem::path& path, IngestReport& report) {
    std::vector<ProductRecord> records;
    for_each_line(path, [&](std::size_t line, std::string_view text_line) {
        (void)line;
        Json row = Json::parse(text_line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            ++report.rejected_rows;
            return;
        }
        try {
            records.push_back(ProductRecord::from_json(row));
        } catch (const ParseError&) {
            ++report.rejected_rows;
        }
    });
    return records;
}

std::vector<ProductRecord> parse_tsv(const std::filesystem::path& path, IngestReport& report) {
    std::vector<ProductRecord> records;
    for_each_line(path, [&](std::size_t line, std::string_view text_line) {
        (void)line;
        auto cols = text::split(std::string(text_line), '\t');
        if (cols.size() < 2) {
            ++report.rejected_rows;
            return;
        }
        ProductRecord rec;
        rec.product_id = cols[0];
        rec.title = cols[1];
        if (cols.size() > 2) rec.description = cols[2];
        if (cols.size() > 3 && !cols[3].empty()) {
            std::string bullets = cols[3];
            std::size_t start = 0;
            while (true) {
                std::size_t pos = bullets.find(kBulletSep, start);
                std::string piece = pos == std::string::npos
                                        ? bullets.substr(start)
                                        : bullets.substr(start, pos - start);
                if (!piece.empty()) rec.bullets.push_back(piece);
                if (pos == std::string::npos) break;
                start = pos + 3;
            }
        }
        if (cols.size() > 4 && !cols[4].empty()) {
            std::size_t slash = cols[4].find('/');
            if (slash == std::string::npos) {
                rec.super_category = cols[4];
            } else {
                rec.super_category = cols[4].substr(0, slash);
                rec.sub_category = cols[4].substr(slash + 1);
            }
        }
        records.push_back(std::move(rec));
    });
    return records;
}

}  // namespace

LoadResult load_catalog(const std::filesystem::path& path, Format format) {
    LoadResult result;
    std::vector<ProductRecord> records = format == Format::jsonl
                                             ? parse_jsonl(path, result.report)
                                             : parse_tsv(path, result.report);
    result.store = ProductStore::from_records(std::move(records), &result.report);
    return result;
}

ProductStore filter_categories(const ProductStore& store, const FilterPolicy& policy,
                               FilterReport* report) {
    // Sub-category sizes keyed by full (super, sub) path.
    std::map<std::string, std::size_t> sizes;
    for (const auto& id : store.ids()) {
        const auto& rec = store.get(id);
        if (rec.has_category()) ++sizes[rec.category_path()];
    }

    std::vector<ProductRecord> kept;
    kept.reserve(store.size());
    for (const auto& id : store.ids()) {
        const auto& rec = store.get(id);
        if (!rec.has_category()) {
            if (report) ++report->uncategorized_kept;
            kept.push_back(rec);
            continue;
        }
        if (policy.excluded_category_names.count(rec.sub_category) > 0) {
            if (report) ++report->removed_excluded;
            continue;
        }
        if (sizes[rec.category_path()] < policy.min_category_size) {
            if (report) ++report->removed_small;
            continue;
        }
        kept.push_back(rec);
    }
    return ProductStore::from_records(std::move(kept));
}

}  // namespace graphrank::catalog
