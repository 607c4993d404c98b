#include "graphrank/service.hpp"

#include <algorithm>
#include <chrono>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "graphrank/errors.hpp"
#include "graphrank/text.hpp"

namespace graphrank::service {

Artifacts Artifacts::load(const PipelineConfig& config) {
    for (const auto& path :
         {config.enriched_catalog_file(), config.registry_file(), config.attributes_file(),
          config.graph_file(), config.dense_index_file(), config.sparse_index_file()}) {
        if (!std::filesystem::exists(path)) {
            throw IoError("artifact missing: " + path.string() + " (run the pipeline first)");
        }
    }

    Artifacts a;
    a.store = catalog::load_catalog(config.enriched_catalog_file(), catalog::Format::jsonl).store;
    a.registry = schema::SchemaRegistry::load(config.registry_file());
    a.attributes = extraction::AttributeStore::load(config.attributes_file());
    a.graph = graph::AttributeGraph::build(a.attributes);
    a.dense = retrieval::DenseIndex::load(config.dense_index_file());
    a.sparse = retrieval::SparseIndex::load(config.sparse_index_file());

    for (const auto& id : a.attributes.ids()) {
        auto set = a.attributes.find(id);
        if (set->schema_version != a.registry.version()) {
            throw ConfigError("attribute store entry " + id + " is at schema version " +
                              std::to_string(set->schema_version) + " but the registry is at " +
                              std::to_string(a.registry.version()) +
                              "; re-run the extract stage");
        }
    }
    if (a.dense.size() != a.store.size()) {
        throw ConfigError("dense index covers " + std::to_string(a.dense.size()) +
                          " documents but the catalog has " + std::to_string(a.store.size()));
    }
    return a;
}

Json StageTimings::to_json() const {
    return Json{{"retrieve_ms", retrieve_ms},
                {"extract_ms", extract_ms},
                {"subgraph_ms", subgraph_ms},
                {"rank_ms", rank_ms}};
}

Json SimilarResponse::to_json() const {
    Json items_json = Json::array();
    for (const auto& item : items) {
        items_json.push_back(Json{{"product_id", item.product_id},
                                  {"score", item.score},
                                  {"source", ranking::to_string(item.source)},
                                  {"matched_attributes", item.matched_attributes}});
    }
    return Json{{"query_id", query_id},
                {"ranker", ranking::to_string(ranker)},
                {"degraded", degraded},
                {"items", std::move(items_json)},
                {"token_stats", token_stats.to_json()},
                {"timing", timings.to_json()}};
}

ServiceContext::ServiceContext(PipelineConfig config, Artifacts artifacts,
                               pipeline::ProviderBundle& providers,
                               prompts::PromptLibrary prompts)
    : config_(std::move(config)), artifacts_(std::move(artifacts)), providers_(providers),
      prompts_(std::move(prompts)) {
    schemas_ = std::make_unique<schema::SchemaService>(artifacts_.registry, providers_.model(),
                                                       prompts_, config_.provider_settings,
                                                       providers_.log());
}

retrieval::CandidateSet ServiceContext::search(const std::string& query_id, std::size_t k,
                                               retrieval::Method method) const {
    const auto& rec = artifacts_.store.get(query_id);
    if (method == retrieval::Method::sparse) {
        return artifacts_.sparse.search(catalog::product_text(rec), k, query_id);
    }
    auto query_vec = provider::embed_text(providers_.embedder(), catalog::product_text(rec));
    return artifacts_.dense.search(query_vec, k, query_id);
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

SimilarResponse ServiceContext::similar_impl(const std::string& query_id, std::size_t k,
                                             ranking::Ranker kind, StageTimings& timings) {
    auto t0 = std::chrono::steady_clock::now();
    auto candidates = search(query_id, k, retrieval::Method::dense);
    timings.retrieve_ms = elapsed_ms(t0);

    // Online extraction for queries whose attributes were not computed offline.
    t0 = std::chrono::steady_clock::now();
    auto cached = artifacts_.attributes.find(query_id);
    bool cache_hit = cached && cached->schema_version == schemas_->version();
    extraction::AttributeSet query_attrs =
        cache_hit ? *cached
                  : extraction::get_or_extract(query_id, artifacts_.store, *schemas_,
                                               providers_.model(), artifacts_.attributes,
                                               prompts_, config_.provider_settings,
                                               providers_.log());
    if (!cache_hit && config_.persist_online_extractions) {
        artifacts_.attributes.save(config_.attributes_file());
    }
    timings.extract_ms = elapsed_ms(t0);

    t0 = std::chrono::steady_clock::now();
    const auto& rec = artifacts_.store.get(query_id);
    auto schema_order =
        rec.super_category.empty()
            ? std::vector<std::string>{}
            : schemas_->resolve({rec.super_category, rec.sub_category}).names();
    auto subgraph =
        graph::local_subgraph(artifacts_.graph, query_attrs, candidates.ids(), schema_order);
    timings.subgraph_ms = elapsed_ms(t0);

    t0 = std::chrono::steady_clock::now();
    ranking::RankedList list;
    ranking::RawPayload raw_payload;
    {
        std::vector<catalog::ProductRecord> cand_records;
        for (const auto& id : candidates.ids()) cand_records.push_back(artifacts_.store.get(id));
        raw_payload = ranking::build_raw_payload(rec, cand_records, prompts_);
    }
    switch (kind) {
        case ranking::Ranker::graph: {
            auto payload = ranking::build_rank_payload(subgraph, candidates, prompts_);
            list = ranking::rank_graph(payload, subgraph, candidates, providers_.model(),
                                       prompts_, config_.provider_settings, providers_.log());
            list.token_stats = ranking::token_report(payload, raw_payload);
            break;
        }
        case ranking::Ranker::raw: {
            auto fallback = [&](const std::string& id) {
                return ranking::attribute_overlap_score(subgraph, id);
            };
            list = ranking::rank_raw(raw_payload, candidates, providers_.model(), prompts_,
                                     fallback, config_.provider_settings, providers_.log());
            break;
        }
        case ranking::Ranker::fallback: {
            list = ranking::rank_fallback(subgraph, candidates);
            auto payload = ranking::build_rank_payload(subgraph, candidates, prompts_);
            list.token_stats = ranking::token_report(payload, raw_payload);
            break;
        }
    }
    timings.rank_ms = elapsed_ms(t0);

    SimilarResponse response;
    response.query_id = query_id;
    response.ranker = list.ranker;
    response.degraded = list.degraded;
    response.token_stats = list.token_stats;
    for (const auto& item : list.items) {
        SimilarItem out{item.product_id, item.score, item.source, {}};
        for (const auto& t : graph::shared_triples(subgraph, item.product_id)) {
            if (t.candidate_value &&
                text::normalize_match(t.query_value) == text::normalize_match(*t.candidate_value)) {
                out.matched_attributes.push_back(t.attribute);
                if (out.matched_attributes.size() >= 5) break;
            }
        }
        response.items.push_back(std::move(out));
    }
    return response;
}

SimilarResponse ServiceContext::similar(const std::string& query_id, std::size_t k,
                                        ranking::Ranker kind) {
    StageTimings timings;
    SimilarResponse response = similar_impl(query_id, k, kind, timings);
    response.timings = timings;
    return response;
}

ranking::RankedList ServiceContext::rank(const std::string& query_id, std::size_t k,
                                         ranking::Ranker kind) {
    StageTimings timings;
    SimilarResponse response = similar_impl(query_id, k, kind, timings);

    ranking::RankedList list;
    list.query_id = response.query_id;
    list.ranker = response.ranker;
    list.degraded = response.degraded;
    list.token_stats = response.token_stats;
    for (const auto& item : response.items) {
        list.items.push_back({item.product_id, item.score, item.source, {}});
    }
    return list;
}

Json ServiceContext::product_attributes(const std::string& product_id) const {
    auto set = artifacts_.attributes.find(product_id);
    if (!set) throw NotFoundError("no attributes for product: " + product_id);
    return set->to_json();
}

Json ServiceContext::stats() const {
    std::map<std::string, std::size_t> coverage;  // pair count -> products
    for (const auto& id : artifacts_.graph.product_ids()) {
        coverage[std::to_string(artifacts_.graph.attributes_of(id).size())]++;
    }
    std::size_t cached = 0;
    for (const auto& id : artifacts_.store.ids()) {
        auto set = artifacts_.attributes.find(id);
        if (set && set->schema_version == artifacts_.registry.version()) ++cached;
    }
    return Json{
        {"products", artifacts_.graph.product_count()},
        {"attributes", artifacts_.graph.attribute_count()},
        {"edges", artifacts_.graph.edge_count()},
        {"categories", artifacts_.store.category_index().size()},
        {"coverage_histogram", coverage},
        {"cache_hit_rate", artifacts_.store.empty()
                               ? 0.0
                               : static_cast<double>(cached) /
                                     static_cast<double>(artifacts_.store.size())}};
}

int run_server(ServiceContext& context, int port) {
    httplib::Server server;

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(Json{{"status", "ok"}}.dump(), "application/json");
    });

    server.Get("/v1/similar", [&](const httplib::Request& req, httplib::Response& res) {
        try {
            std::string query_id = req.get_param_value("query_id");
            if (query_id.empty()) {
                res.status = 400;
                res.set_content(Json{{"error", "query_id is required"}}.dump(),
                                "application/json");
                return;
            }
            std::size_t k = context.default_k();
            if (req.has_param("k")) k = std::stoul(req.get_param_value("k"));
            k = std::clamp<std::size_t>(k, 1, 200);
            ranking::Ranker kind = ranking::Ranker::graph;
            if (req.has_param("ranker")) kind = ranker_from_string(req.get_param_value("ranker"));
            res.set_content(context.similar(query_id, k, kind).to_json().dump(),
                            "application/json");
        } catch (const NotFoundError& e) {
            res.status = 404;
            res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
        }
    });

    server.Get(R"(/v1/product/([^/]+)/attributes)",
               [&](const httplib::Request& req, httplib::Response& res) {
                   try {
                       res.set_content(context.product_attributes(req.matches[1]).dump(),
                                       "application/json");
                   } catch (const NotFoundError& e) {
                       res.status = 404;
                       res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
                   }
               });

    spdlog::info("serving on port {}", port);
    if (!server.listen("0.0.0.0", port)) {
        spdlog::error("failed to bind port {}", port);
        return 2;
    }
    return 0;
}

}  // namespace graphrank::service
