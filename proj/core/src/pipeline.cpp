#include "graphrank/pipeline.hpp"

#include <set>

#include <spdlog/spdlog.h>

#include "graphrank/errors.hpp"
#include "graphrank/graph.hpp"
#include "graphrank/hash.hpp"
#include "graphrank/http_provider.hpp"
#include "graphrank/retrieval.hpp"
#include "graphrank/schema.hpp"

namespace graphrank::pipeline {

ProviderBundle::ProviderBundle(const PipelineConfig& config)
    : embedder_(config.embed_dimension, config.embed_seed) {
    if (config.provider_kind == "scripted") {
        auto scripted = std::make_unique<provider::ScriptedProvider>(true);
        scripted->load_transcript(config.transcript_in);
        base_ = std::move(scripted);
    } else if (config.provider_kind == "http") {
        base_ = std::make_unique<provider::HttpProvider>(
            config.provider_endpoint, config.provider_settings.timeout, config.provider_api_key);
    } else {
        base_ = std::make_unique<provider::HeuristicProvider>();
    }
    active_ = base_.get();
    if (config.requests_per_sec > 0.0) {
        limited_ = std::make_unique<provider::RateLimitedProvider>(
            *base_, config.requests_per_sec, std::max(1.0, config.requests_per_sec));
        active_ = limited_.get();
    }
    if (!config.transcript_out.empty()) log_ = std::make_unique<provider::TranscriptLog>();
}

void ProviderBundle::flush(const PipelineConfig& config) {
    if (log_ && !config.transcript_out.empty()) log_->save(config.transcript_out);
}

Pipeline::Pipeline(PipelineConfig config, ProviderBundle& providers,
                   prompts::PromptLibrary prompts)
    : config_(std::move(config)), providers_(providers), prompts_(std::move(prompts)) {}

namespace {

std::string content_hash(const std::filesystem::path& path) {
    return hex64(fnv1a64(read_file(path)));
}

Json load_manifest(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return Json::object();
    return parse_json(read_file(path), "pipeline manifest");
}

}  // namespace

bool Pipeline::up_to_date(const std::string& stage,
                          const std::vector<std::filesystem::path>& inputs,
                          const std::vector<std::filesystem::path>& outputs) const {
    for (const auto& out : outputs) {
        if (!std::filesystem::exists(out)) return false;
    }
    Json manifest = load_manifest(config_.manifest_file());
    if (!manifest.contains(stage)) return false;
    const Json& recorded = manifest[stage]["inputs"];
    for (const auto& in : inputs) {
        // Keyed by filename so manifests are byte-identical across work dirs.
        std::string key = in.filename().string();
        if (!std::filesystem::exists(in)) return false;
        if (!recorded.contains(key) || recorded[key].get<std::string>() != content_hash(in)) {
            return false;
        }
    }
    return true;
}

void Pipeline::record(const std::string& stage,
                      const std::vector<std::filesystem::path>& inputs) {
    Json manifest = load_manifest(config_.manifest_file());
    Json ins = Json::object();
    for (const auto& in : inputs) ins[in.filename().string()] = content_hash(in);
    manifest[stage] = Json{{"inputs", std::move(ins)}};
    write_file(config_.manifest_file(), manifest.dump(2) + "\n");
}

StageStatus Pipeline::run_ingest() {
    std::vector<std::filesystem::path> inputs{config_.catalog_path};
    std::vector<std::filesystem::path> outputs{config_.catalog_artifact(),
                                               config_.ingest_report_file()};
    if (up_to_date("ingest", inputs, outputs)) return {"ingest", true, "up to date"};

    if (!std::filesystem::exists(config_.catalog_path)) {
        throw IoError("catalog not found: " + config_.catalog_path.string());
    }
    auto loaded = catalog::load_catalog(config_.catalog_path, config_.catalog_format);
    catalog::FilterReport filter_report;
    auto filtered = catalog::filter_categories(loaded.store, config_.filter, &filter_report);
    filtered.save(config_.catalog_artifact());

    Json report = loaded.report.to_json();
    report["filtered_out"] = filter_report.removed_excluded + filter_report.removed_small;
    report["uncategorized_kept"] = filter_report.uncategorized_kept;
    write_file(config_.ingest_report_file(), report.dump(2) + "\n");

    record("ingest", inputs);
    return {"ingest", false,
            std::to_string(filtered.size()) + " products (" +
                std::to_string(loaded.report.rejected_rows) + " rejected, " +
                std::to_string(loaded.report.duplicates_dropped) + " duplicates)"};
}

StageStatus Pipeline::run_schema() {
    std::vector<std::filesystem::path> inputs{config_.catalog_artifact()};
    std::vector<std::filesystem::path> outputs{config_.enriched_catalog_file(),
                                               config_.registry_file(),
                                               config_.suggestions_file()};
    if (up_to_date("schema", inputs, outputs)) return {"schema", true, "up to date"};

    auto loaded = catalog::load_catalog(config_.catalog_artifact(), catalog::Format::jsonl);
    schema::SchemaService service(schema::SchemaRegistry{}, providers_.model(), prompts_,
                                  config_.provider_settings, providers_.log());

    // Classify records missing categories, then make sure every category
    // present has a schema, then standardize names across the registry.
    std::vector<catalog::ProductRecord> enriched;
    std::size_t classified = 0;
    for (const auto& id : loaded.store.ids()) {
        catalog::ProductRecord rec = loaded.store.get(id);
        if (rec.super_category.empty()) {
            auto result = schema::classify_category(rec, providers_.model(), service.snapshot(),
                                                    prompts_, config_.provider_settings,
                                                    providers_.log());
            rec.super_category = result.super_category;
            rec.sub_category = result.sub_category;
            ++classified;
        }
        enriched.push_back(std::move(rec));
    }

    std::set<schema::CategoryPath> paths;
    for (const auto& rec : enriched) {
        if (!rec.super_category.empty()) paths.insert({rec.super_category, rec.sub_category});
    }
    for (const auto& path : paths) service.resolve_or_generate(path);

    std::map<std::string, std::string> manual;
    if (!config_.aliases_file.empty()) {
        manual = schema::load_manual_aliases(config_.aliases_file);
    }
    auto standardized = service.standardize(manual);
    schema::save_suggestions(standardized.suggestions, config_.suggestions_file());
    service.snapshot().save(config_.registry_file());

    catalog::ProductStore::from_records(std::move(enriched))
        .save(config_.enriched_catalog_file());

    record("schema", inputs);
    return {"schema", false,
            std::to_string(classified) + " classified, " + std::to_string(paths.size()) +
                " categories, " + std::to_string(standardized.merges) + " merges"};
}

StageStatus Pipeline::run_extract() {
    std::vector<std::filesystem::path> inputs{config_.enriched_catalog_file(),
                                              config_.registry_file()};
    std::vector<std::filesystem::path> outputs{config_.attributes_file(),
                                               config_.extract_report_file()};
    if (up_to_date("extract", inputs, outputs)) return {"extract", true, "up to date"};

    auto loaded = catalog::load_catalog(config_.enriched_catalog_file(), catalog::Format::jsonl);
    schema::SchemaService service(schema::SchemaRegistry::load(config_.registry_file()),
                                  providers_.model(), prompts_, config_.provider_settings,
                                  providers_.log());

    extraction::AttributeStore store;
    if (std::filesystem::exists(config_.attributes_file())) {
        store = extraction::AttributeStore::load(config_.attributes_file());
    }
    extract_report_ = extraction::extract_batch(loaded.store, service, providers_.model(), store,
                                                config_.parallelism, prompts_,
                                                config_.provider_settings, providers_.log());
    store.save(config_.attributes_file());
    write_file(config_.extract_report_file(), extract_report_.to_json().dump(2) + "\n");

    // On-the-fly generation during extraction may have grown the registry.
    service.snapshot().save(config_.registry_file());

    record("extract", inputs);
    if (extract_report_.failure_ratio() > config_.failure_ratio_threshold) {
        spdlog::warn("extract failure ratio {:.2f} exceeds threshold {:.2f}",
                     extract_report_.failure_ratio(), config_.failure_ratio_threshold);
    }
    return {"extract", false,
            std::to_string(extract_report_.succeeded) + " extracted, " +
                std::to_string(extract_report_.skipped_cached) + " cached, " +
                std::to_string(extract_report_.failed) + " failed"};
}

StageStatus Pipeline::run_graph() {
    std::vector<std::filesystem::path> inputs{config_.attributes_file()};
    std::vector<std::filesystem::path> outputs{config_.graph_file()};
    if (up_to_date("graph", inputs, outputs)) return {"graph", true, "up to date"};

    auto store = extraction::AttributeStore::load(config_.attributes_file());
    auto g = graph::AttributeGraph::build(store);
    g.save(config_.graph_file());

    record("graph", inputs);
    return {"graph", false,
            std::to_string(g.product_count()) + " products, " +
                std::to_string(g.attribute_count()) + " attributes, " +
                std::to_string(g.edge_count()) + " edges"};
}

StageStatus Pipeline::run_index() {
    std::vector<std::filesystem::path> inputs{config_.enriched_catalog_file()};
    std::vector<std::filesystem::path> outputs{config_.dense_index_file(),
                                               config_.sparse_index_file()};
    if (up_to_date("index", inputs, outputs)) return {"index", true, "up to date"};

    auto loaded = catalog::load_catalog(config_.enriched_catalog_file(), catalog::Format::jsonl);
    retrieval::DenseIndex::build(loaded.store, providers_.embedder())
        .save(config_.dense_index_file());
    retrieval::SparseIndex::build(loaded.store).save(config_.sparse_index_file());

    record("index", inputs);
    return {"index", false, std::to_string(loaded.store.size()) + " documents indexed"};
}

std::vector<StageStatus> Pipeline::run_all() {
    std::vector<StageStatus> statuses;
    statuses.push_back(run_ingest());
    statuses.push_back(run_schema());
    statuses.push_back(run_extract());
    statuses.push_back(run_graph());
    statuses.push_back(run_index());
    providers_.flush(config_);
    return statuses;
}

}  // namespace graphrank::pipeline
