#include "graphrank/config.hpp"

#include <algorithm>
#include <cstdlib>

#include "graphrank/errors.hpp"

namespace graphrank {

ranking::Ranker ranker_from_string(const std::string& s) {
    if (s == "graph") return ranking::Ranker::graph;
    if (s == "raw") return ranking::Ranker::raw;
    if (s == "fallback") return ranking::Ranker::fallback;
    throw ConfigError("unknown ranker '" + s + "' (expected graph|raw|fallback)");
}

PipelineConfig PipelineConfig::from_json(const Json& j) {
    PipelineConfig cfg;
    if (j.contains("work_dir")) cfg.work_dir = j["work_dir"].get<std::string>();
    if (j.contains("catalog")) {
        const auto& c = j["catalog"];
        cfg.catalog_path = c.value("path", std::string{});
        std::string format = c.value("format", std::string{"jsonl"});
        if (format == "jsonl") {
            cfg.catalog_format = catalog::Format::jsonl;
        } else if (format == "tsv") {
            cfg.catalog_format = catalog::Format::tsv;
        } else {
            throw ConfigError("unknown catalog format '" + format + "'");
        }
    }
    if (j.contains("filter")) {
        const auto& f = j["filter"];
        for (const auto& name : f.value("excluded_categories", std::vector<std::string>{})) {
            cfg.filter.excluded_category_names.insert(name);
        }
        cfg.filter.min_category_size = f.value("min_category_size", std::size_t{0});
    }
    cfg.k_d = j.value("k_d", cfg.k_d);
    if (j.contains("ranker")) cfg.ranker = ranker_from_string(j["ranker"].get<std::string>());
    cfg.parallelism = j.value("parallelism", cfg.parallelism);
    if (j.contains("thresholds")) cfg.thresholds = j["thresholds"].get<std::vector<int>>();
    if (j.contains("ks")) cfg.ks = j["ks"].get<std::vector<int>>();
    cfg.failure_ratio_threshold = j.value("failure_ratio_threshold", cfg.failure_ratio_threshold);
    if (j.contains("embedding")) {
        const auto& e = j["embedding"];
        cfg.embed_dimension = e.value("dimension", cfg.embed_dimension);
        cfg.embed_seed = e.value("seed", cfg.embed_seed);
    }
    if (j.contains("provider")) {
        const auto& p = j["provider"];
        cfg.provider_kind = p.value("kind", cfg.provider_kind);
        cfg.provider_endpoint = p.value("endpoint", cfg.provider_endpoint);
        cfg.provider_api_key = p.value("api_key", cfg.provider_api_key);
        cfg.requests_per_sec = p.value("requests_per_sec", cfg.requests_per_sec);
        cfg.provider_settings.max_retries =
            p.value("max_retries", cfg.provider_settings.max_retries);
        cfg.provider_settings.timeout =
            std::chrono::milliseconds(p.value("timeout_ms", cfg.provider_settings.timeout.count()));
        cfg.provider_settings.backoff_base = std::chrono::milliseconds(
            p.value("backoff_base_ms", cfg.provider_settings.backoff_base.count()));
        cfg.transcript_in = p.value("transcript_in", std::string{});
        cfg.transcript_out = p.value("transcript_out", std::string{});
    }
    cfg.prompts_dir = j.value("prompts_dir", std::string{});
    cfg.aliases_file = j.value("aliases_file", std::string{});
    cfg.persist_online_extractions =
        j.value("persist_online_extractions", cfg.persist_online_extractions);
    cfg.port = j.value("port", cfg.port);
    return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
    PipelineConfig cfg = from_json(parse_json(read_file(path), "config " + path.string()));
    cfg.apply_env();
    cfg.validate();
    return cfg;
}

void PipelineConfig::apply_env() {
    if (const char* v = std::getenv("GRAPHRANK_PROVIDER_KIND")) provider_kind = v;
    if (const char* v = std::getenv("GRAPHRANK_PROVIDER_ENDPOINT")) provider_endpoint = v;
    if (const char* v = std::getenv("GRAPHRANK_PROVIDER_API_KEY")) provider_api_key = v;
    if (const char* v = std::getenv("GRAPHRANK_PROVIDER_RPS")) requests_per_sec = std::atof(v);
}

void PipelineConfig::validate() {
    k_d = std::clamp<std::size_t>(k_d, 1, 200);
    if (parallelism < 1) parallelism = 1;
    if (embed_dimension < 2) throw ConfigError("embedding dimension must be >= 2");
    if (provider_kind != "heuristic" && provider_kind != "scripted" && provider_kind != "http") {
        throw ConfigError("unknown provider kind '" + provider_kind + "'");
    }
    if (provider_kind == "http" && provider_endpoint.empty()) {
        throw ConfigError("http provider needs an endpoint");
    }
    if (provider_kind == "scripted" && transcript_in.empty()) {
        throw ConfigError("scripted provider needs provider.transcript_in");
    }
    if (thresholds.empty()) throw ConfigError("thresholds must be non-empty");
    if (ks.empty()) throw ConfigError("ks must be non-empty");
}

}  // namespace graphrank
