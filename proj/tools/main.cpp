// graphrank CLI: every pipeline stage as a verb, plus the HTTP service.
// Exit codes: 0 success, 1 usage, 2 stage failure, 3 degraded-threshold
// exceeded (extract failure ratio above the configured limit).

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "graphrank/config.hpp"
#include "graphrank/eval.hpp"
#include "graphrank/graph.hpp"
#include "graphrank/pipeline.hpp"
#include "graphrank/service.hpp"
#include "graphrank/text.hpp"

namespace gr = graphrank;

namespace {

struct CommonOpts {
    std::string config_file;
    std::string work_dir;
    std::string provider_kind;
    std::string transcript_in;
    std::string transcript_out;
    std::string prompts_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_file, "pipeline config JSON");
    cmd->add_option("--work-dir", opts.work_dir, "artifact directory (default: work)");
    cmd->add_option("--provider", opts.provider_kind, "heuristic|scripted|http");
    cmd->add_option("--transcript-in", opts.transcript_in, "transcript to replay (scripted)");
    cmd->add_option("--transcript-out", opts.transcript_out, "record raw exchanges here");
    cmd->add_option("--prompts-dir", opts.prompts_dir, "prompt template overrides");
}

gr::PipelineConfig make_config(const CommonOpts& opts) {
    gr::PipelineConfig cfg;
    if (!opts.config_file.empty()) cfg = gr::PipelineConfig::from_file(opts.config_file);
    if (!opts.work_dir.empty()) cfg.work_dir = opts.work_dir;
    if (!opts.provider_kind.empty()) cfg.provider_kind = opts.provider_kind;
    if (!opts.transcript_in.empty()) cfg.transcript_in = opts.transcript_in;
    if (!opts.transcript_out.empty()) cfg.transcript_out = opts.transcript_out;
    if (!opts.prompts_dir.empty()) cfg.prompts_dir = opts.prompts_dir;
    cfg.apply_env();
    cfg.validate();
    return cfg;
}

gr::prompts::PromptLibrary make_prompts(const gr::PipelineConfig& cfg) {
    auto prompts = gr::prompts::PromptLibrary::builtin();
    if (!cfg.prompts_dir.empty()) prompts.load_directory(cfg.prompts_dir);
    return prompts;
}

void print_stage(const gr::pipeline::StageStatus& status) {
    std::printf("[%s] %s%s\n", status.stage.c_str(), status.skipped ? "up-to-date" : "done",
                status.detail.empty() ? "" : (": " + status.detail).c_str());
}

gr::ranking::RankedList ranked_list_from_json(const gr::Json& j) {
    gr::ranking::RankedList list;
    list.query_id = j.at("query_id").get<std::string>();
    list.ranker = gr::ranker_from_string(j.value("ranker", std::string{"graph"}));
    list.degraded = j.value("degraded", false);
    for (const auto& item : j.at("items")) {
        gr::ranking::ScoredCandidate c;
        c.product_id = item.at("product_id").get<std::string>();
        c.score = item.at("score").get<int>();
        c.source = item.value("source", std::string{"model"}) == "fallback"
                       ? gr::ranking::Source::fallback
                       : gr::ranking::Source::model;
        list.items.push_back(std::move(c));
    }
    return list;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_pattern("[%^%l%$] %v");
    CLI::App app{"graphrank: attribute-graph entity similarity search"};
    app.require_subcommand(1);
    int exit_code = 0;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "load, validate, and filter a catalog");
    CommonOpts ingest_opts;
    std::string ingest_catalog, ingest_format = "jsonl";
    std::vector<std::string> ingest_exclude;
    std::size_t ingest_min_size = 0;
    add_common(ingest, ingest_opts);
    ingest->add_option("--catalog", ingest_catalog, "catalog file")->required();
    ingest->add_option("--format", ingest_format, "jsonl|tsv");
    ingest->add_option("--exclude", ingest_exclude, "sub-category names to drop");
    ingest->add_option("--min-category-size", ingest_min_size, "drop smaller sub-categories");
    ingest->callback([&] {
        auto cfg = make_config(ingest_opts);
        cfg.catalog_path = ingest_catalog;
        cfg.catalog_format = ingest_format == "tsv" ? gr::catalog::Format::tsv
                                                    : gr::catalog::Format::jsonl;
        for (const auto& name : ingest_exclude) cfg.filter.excluded_category_names.insert(name);
        if (ingest_min_size > 0) cfg.filter.min_category_size = ingest_min_size;
        gr::pipeline::ProviderBundle providers(cfg);
        gr::pipeline::Pipeline pipeline(cfg, providers, make_prompts(cfg));
        print_stage(pipeline.run_ingest());
    });

    // classify
    auto* classify = app.add_subcommand("classify", "predict categories for unlabeled records");
    CommonOpts classify_opts;
    std::string classify_catalog, classify_registry, classify_out;
    add_common(classify, classify_opts);
    classify->add_option("--catalog", classify_catalog, "catalog JSONL")->required();
    classify->add_option("--registry", classify_registry, "schema registry JSON");
    classify->add_option("--out", classify_out, "enriched catalog output")->required();
    classify->callback([&] {
        auto cfg = make_config(classify_opts);
        auto prompts = make_prompts(cfg);
        gr::pipeline::ProviderBundle providers(cfg);
        auto loaded = gr::catalog::load_catalog(classify_catalog, gr::catalog::Format::jsonl);
        gr::schema::SchemaRegistry registry;
        if (!classify_registry.empty() && std::filesystem::exists(classify_registry)) {
            registry = gr::schema::SchemaRegistry::load(classify_registry);
        }
        std::vector<gr::catalog::ProductRecord> out;
        std::size_t classified = 0;
        for (const auto& id : loaded.store.ids()) {
            auto rec = loaded.store.get(id);
            if (rec.super_category.empty()) {
                auto result = gr::schema::classify_category(rec, providers.model(), registry,
                                                            prompts, cfg.provider_settings,
                                                            providers.log());
                rec.super_category = result.super_category;
                rec.sub_category = result.sub_category;
                ++classified;
            }
            out.push_back(std::move(rec));
        }
        gr::catalog::ProductStore::from_records(std::move(out)).save(classify_out);
        providers.flush(cfg);
        std::printf("classified %zu of %zu records\n", classified, loaded.store.size());
    });

    // schema
    auto* schema_cmd = app.add_subcommand("schema", "generate and standardize schemas");
    CommonOpts schema_opts;
    std::string schema_catalog, schema_registry, schema_aliases, schema_suggestions;
    bool schema_standardize = true;
    add_common(schema_cmd, schema_opts);
    schema_cmd->add_option("--catalog", schema_catalog, "classified catalog JSONL")->required();
    schema_cmd->add_option("--registry", schema_registry, "registry path (updated)")->required();
    schema_cmd->add_option("--aliases", schema_aliases, "manual alias override JSON");
    schema_cmd->add_option("--suggestions", schema_suggestions, "merge suggestion output");
    schema_cmd->add_flag("--standardize,!--no-standardize", schema_standardize,
                         "run alias standardization");
    schema_cmd->callback([&] {
        auto cfg = make_config(schema_opts);
        auto prompts = make_prompts(cfg);
        gr::pipeline::ProviderBundle providers(cfg);
        gr::schema::SchemaRegistry registry;
        if (std::filesystem::exists(schema_registry)) {
            registry = gr::schema::SchemaRegistry::load(schema_registry);
        }
        gr::schema::SchemaService service(std::move(registry), providers.model(), prompts,
                                          cfg.provider_settings, providers.log());
        auto loaded = gr::catalog::load_catalog(schema_catalog, gr::catalog::Format::jsonl);
        std::set<gr::schema::CategoryPath> paths;
        for (const auto& id : loaded.store.ids()) {
            const auto& rec = loaded.store.get(id);
            if (!rec.super_category.empty()) {
                paths.insert({rec.super_category, rec.sub_category});
            }
        }
        for (const auto& path : paths) service.resolve_or_generate(path);
        if (schema_standardize) {
            std::map<std::string, std::string> manual;
            if (!schema_aliases.empty()) manual = gr::schema::load_manual_aliases(schema_aliases);
            auto result = service.standardize(manual);
            if (!schema_suggestions.empty()) {
                gr::schema::save_suggestions(result.suggestions, schema_suggestions);
            }
            std::printf("%zu merges, %zu suggestions\n", result.merges,
                        result.suggestions.size());
        }
        service.snapshot().save(schema_registry);
        providers.flush(cfg);
        std::printf("registry at version %d with %zu schemas\n", service.version(),
                    service.snapshot().schemas().size());
    });

    // extract
    auto* extract = app.add_subcommand("extract", "extract attribute values for a catalog");
    CommonOpts extract_opts;
    std::string extract_catalog, extract_registry, extract_out;
    std::size_t extract_parallelism = 4;
    bool only_missing = false;
    add_common(extract, extract_opts);
    extract->add_option("--catalog", extract_catalog, "classified catalog JSONL")->required();
    extract->add_option("--registry", extract_registry, "schema registry JSON")->required();
    extract->add_option("--out", extract_out, "attribute store JSONL")->required();
    extract->add_option("--parallelism", extract_parallelism, "concurrent extractions");
    extract->add_flag("--only-missing", only_missing,
                      "keep cached entries at the current schema version");
    extract->callback([&] {
        auto cfg = make_config(extract_opts);
        auto prompts = make_prompts(cfg);
        gr::pipeline::ProviderBundle providers(cfg);
        auto loaded = gr::catalog::load_catalog(extract_catalog, gr::catalog::Format::jsonl);
        gr::schema::SchemaService service(gr::schema::SchemaRegistry::load(extract_registry),
                                          providers.model(), prompts, cfg.provider_settings,
                                          providers.log());
        gr::extraction::AttributeStore store;
        if (only_missing && std::filesystem::exists(extract_out)) {
            store = gr::extraction::AttributeStore::load(extract_out);
        }
        auto report = gr::extraction::extract_batch(loaded.store, service, providers.model(),
                                                    store, extract_parallelism, prompts,
                                                    cfg.provider_settings, providers.log());
        store.save(extract_out);
        providers.flush(cfg);
        std::printf("%s\n", report.to_json().dump(2).c_str());
        if (report.failure_ratio() > cfg.failure_ratio_threshold) exit_code = 3;
    });

    // graph
    auto* graph_cmd = app.add_subcommand("graph", "build the bipartite attribute graph");
    std::string graph_attributes, graph_out;
    graph_cmd->add_option("--attributes", graph_attributes, "attribute store JSONL")->required();
    graph_cmd->add_option("--out", graph_out, "graph file")->required();
    graph_cmd->callback([&] {
        auto store = gr::extraction::AttributeStore::load(graph_attributes);
        auto g = gr::graph::AttributeGraph::build(store);
        g.save(graph_out);
        std::printf("%zu products, %zu attributes, %zu edges\n", g.product_count(),
                    g.attribute_count(), g.edge_count());
    });

    // index
    auto* index_cmd = app.add_subcommand("index", "build a retrieval index");
    CommonOpts index_opts;
    std::string index_kind = "dense", index_catalog, index_out;
    std::size_t index_dim = 64;
    std::uint64_t index_seed = 42;
    add_common(index_cmd, index_opts);
    index_cmd->add_option("--kind", index_kind, "sparse|dense")->required();
    index_cmd->add_option("--catalog", index_catalog, "catalog JSONL")->required();
    index_cmd->add_option("--out", index_out, "index file")->required();
    index_cmd->add_option("--dim", index_dim, "embedding dimension (dense)");
    index_cmd->add_option("--seed", index_seed, "embedding seed (dense)");
    index_cmd->callback([&] {
        auto loaded = gr::catalog::load_catalog(index_catalog, gr::catalog::Format::jsonl);
        if (index_kind == "sparse") {
            gr::retrieval::SparseIndex::build(loaded.store).save(index_out);
        } else if (index_kind == "dense") {
            gr::provider::HashEmbedder embedder(index_dim, index_seed);
            gr::retrieval::DenseIndex::build(loaded.store, embedder).save(index_out);
        } else {
            throw gr::ConfigError("unknown index kind '" + index_kind + "'");
        }
        std::printf("indexed %zu documents (%s)\n", loaded.store.size(), index_kind.c_str());
    });

    // search
    auto* search_cmd = app.add_subcommand("search", "retrieve top-k candidates for a product");
    std::string search_query, search_kind = "dense", search_catalog, search_index, search_out;
    std::size_t search_k = 50;
    std::size_t search_dim = 64;
    std::uint64_t search_seed = 42;
    search_cmd->add_option("--query-id", search_query, "query product id")->required();
    search_cmd->add_option("--k", search_k, "candidates to return");
    search_cmd->add_option("--kind", search_kind, "sparse|dense");
    search_cmd->add_option("--catalog", search_catalog, "catalog JSONL")->required();
    search_cmd->add_option("--index", search_index, "index file")->required();
    search_cmd->add_option("--dim", search_dim, "embedding dimension (dense)");
    search_cmd->add_option("--seed", search_seed, "embedding seed (dense)");
    search_cmd->add_option("--out", search_out, "write result JSON here");
    search_cmd->callback([&] {
        auto loaded = gr::catalog::load_catalog(search_catalog, gr::catalog::Format::jsonl);
        const auto& rec = loaded.store.get(search_query);
        gr::retrieval::CandidateSet result;
        if (search_kind == "sparse") {
            auto index = gr::retrieval::SparseIndex::load(search_index);
            result = index.search(gr::catalog::product_text(rec), search_k, search_query);
        } else {
            auto index = gr::retrieval::DenseIndex::load(search_index);
            gr::provider::HashEmbedder embedder(search_dim, search_seed);
            auto query_vec =
                gr::provider::embed_text(embedder, gr::catalog::product_text(rec));
            result = index.search(query_vec, search_k, search_query);
        }
        gr::Json out = gr::Json::array();
        for (const auto& entry : result.entries) {
            out.push_back(gr::Json{{"product_id", entry.product_id}, {"score", entry.score}});
        }
        gr::Json doc{{"query_id", search_query}, {"method", search_kind}, {"candidates", out}};
        if (search_out.empty()) {
            std::printf("%s\n", doc.dump(2).c_str());
        } else {
            gr::write_file(search_out, doc.dump(2) + "\n");
        }
    });

    // rank
    auto* rank_cmd = app.add_subcommand("rank", "rank candidates for a query product");
    CommonOpts rank_opts;
    std::string rank_query, rank_ranker = "graph", rank_out;
    std::size_t rank_k = 50;
    add_common(rank_cmd, rank_opts);
    rank_cmd->add_option("--query-id", rank_query, "query product id")->required();
    rank_cmd->add_option("--k", rank_k, "candidates to rank");
    rank_cmd->add_option("--ranker", rank_ranker, "graph|raw|fallback");
    rank_cmd->add_option("--out", rank_out, "write rank result JSON here");
    rank_cmd->callback([&] {
        auto cfg = make_config(rank_opts);
        gr::pipeline::ProviderBundle providers(cfg);
        auto artifacts = gr::service::Artifacts::load(cfg);
        gr::service::ServiceContext context(cfg, std::move(artifacts), providers,
                                            make_prompts(cfg));
        auto list = context.rank(rank_query, rank_k, gr::ranker_from_string(rank_ranker));
        providers.flush(cfg);
        std::string rendered = list.to_json().dump(2) + "\n";
        if (rank_out.empty()) {
            std::fputs(rendered.c_str(), stdout);
        } else {
            gr::write_file(rank_out, rendered);
        }
    });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "score system runs against judgments");
    std::string eval_runs, eval_judgments, eval_out;
    std::string eval_thresholds = "80,50", eval_ks = "1,3,5,10";
    eval_cmd->add_option("--runs", eval_runs, "directory of <system>.jsonl run files")
        ->required();
    eval_cmd->add_option("--judgments", eval_judgments, "judgments JSONL")->required();
    eval_cmd->add_option("--thresholds", eval_thresholds, "comma-separated, e.g. 80,50");
    eval_cmd->add_option("--ks", eval_ks, "comma-separated cutoffs");
    eval_cmd->add_option("--out", eval_out, "write report JSON here");
    eval_cmd->callback([&] {
        gr::eval::EvalOptions options;
        options.thresholds.clear();
        for (const auto& t : gr::text::split(eval_thresholds, ',')) {
            options.thresholds.push_back(std::stoi(t));
        }
        options.ks.clear();
        for (const auto& k : gr::text::split(eval_ks, ',')) options.ks.push_back(std::stoi(k));

        std::map<std::string, gr::eval::SystemRun> systems;
        for (const auto& entry : std::filesystem::directory_iterator(eval_runs)) {
            if (entry.path().extension() != ".jsonl") continue;
            gr::eval::SystemRun run;
            gr::for_each_line(entry.path(), [&](std::size_t line, std::string_view text_line) {
                gr::Json j = gr::Json::parse(text_line, nullptr, false);
                if (j.is_discarded()) throw gr::ParseError("bad run row", line);
                auto list = ranked_list_from_json(j);
                run[list.query_id] = std::move(list);
            });
            systems[entry.path().stem().string()] = std::move(run);
        }
        auto judgments = gr::eval::JudgmentSet::load(eval_judgments);
        auto report = gr::eval::run_eval(systems, judgments, options);
        std::fputs(report.to_table().c_str(), stdout);
        if (!eval_out.empty()) gr::write_file(eval_out, report.to_json().dump(2) + "\n");
    });

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "artifact counts and coverage");
    CommonOpts stats_opts;
    add_common(stats_cmd, stats_opts);
    stats_cmd->callback([&] {
        auto cfg = make_config(stats_opts);
        gr::pipeline::ProviderBundle providers(cfg);
        auto artifacts = gr::service::Artifacts::load(cfg);
        gr::service::ServiceContext context(cfg, std::move(artifacts), providers,
                                            make_prompts(cfg));
        std::printf("%s\n", context.stats().dump(2).c_str());
    });

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "run the similarity HTTP service");
    CommonOpts serve_opts;
    int serve_port = 0;
    add_common(serve_cmd, serve_opts);
    serve_cmd->add_option("--port", serve_port, "listen port (default from config)");
    serve_cmd->callback([&] {
        auto cfg = make_config(serve_opts);
        gr::pipeline::ProviderBundle providers(cfg);
        auto artifacts = gr::service::Artifacts::load(cfg);  // fails fast when stale
        gr::service::ServiceContext context(cfg, std::move(artifacts), providers,
                                            make_prompts(cfg));
        exit_code = gr::service::run_server(context, serve_port > 0 ? serve_port : cfg.port);
    });

    // pipeline
    auto* pipeline_cmd = app.add_subcommand("pipeline", "run ingest through index");
    CommonOpts pipeline_opts;
    std::string pipeline_catalog;
    add_common(pipeline_cmd, pipeline_opts);
    pipeline_cmd->add_option("--catalog", pipeline_catalog, "catalog file (overrides config)");
    pipeline_cmd->callback([&] {
        auto cfg = make_config(pipeline_opts);
        if (!pipeline_catalog.empty()) cfg.catalog_path = pipeline_catalog;
        if (cfg.catalog_path.empty()) {
            throw gr::ConfigError("pipeline needs a catalog path (config or --catalog)");
        }
        gr::pipeline::ProviderBundle providers(cfg);
        gr::pipeline::Pipeline pipeline(cfg, providers, make_prompts(cfg));
        for (const auto& status : pipeline.run_all()) print_stage(status);
        if (pipeline.last_extract_report().failure_ratio() > cfg.failure_ratio_threshold) {
            exit_code = 3;
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return exit_code;
}
