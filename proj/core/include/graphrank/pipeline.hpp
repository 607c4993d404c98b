#pragma once

#include <memory>
#include <string>
#include <vector>

#include "graphrank/config.hpp"
#include "graphrank/extraction.hpp"
#include "graphrank/heuristic.hpp"
#include "graphrank/prompts.hpp"
#include "graphrank/provider.hpp"

namespace graphrank::pipeline {

/// Builds the model provider / embedder stack described by the config:
/// heuristic (offline default), scripted (transcript replay), or http, with
/// optional rate limiting and transcript recording layered on top.
class ProviderBundle {
  public:
    explicit ProviderBundle(const PipelineConfig& config);

    provider::ModelProvider& model() { return *active_; }
    provider::EmbeddingProvider& embedder() { return embedder_; }
    provider::TranscriptLog* log() { return log_ ? log_.get() : nullptr; }

    /// Persists the recorded transcript when the config asked for one.
    void flush(const PipelineConfig& config);

  private:
    std::unique_ptr<provider::ModelProvider> base_;
    std::unique_ptr<provider::ModelProvider> limited_;
    provider::ModelProvider* active_ = nullptr;
    provider::HashEmbedder embedder_;
    std::unique_ptr<provider::TranscriptLog> log_;
};

struct StageStatus {
    std::string stage;
    bool skipped = false;  // artifacts were up to date
    std::string detail;
};

/// Offline stage runner: ingest -> schema -> extract -> graph -> index.
/// Each stage records the content hashes of its inputs in the manifest and is
/// skipped when its outputs exist and the hashes still match, making the
/// whole pipeline resumable and a completed rerun provider-call free.
class Pipeline {
  public:
    Pipeline(PipelineConfig config, ProviderBundle& providers, prompts::PromptLibrary prompts);

    StageStatus run_ingest();
    StageStatus run_schema();
    StageStatus run_extract();
    StageStatus run_graph();
    StageStatus run_index();
    std::vector<StageStatus> run_all();

    const extraction::BatchReport& last_extract_report() const { return extract_report_; }
    const PipelineConfig& config() const { return config_; }

  private:
    bool up_to_date(const std::string& stage, const std::vector<std::filesystem::path>& inputs,
                    const std::vector<std::filesystem::path>& outputs) const;
    void record(const std::string& stage, const std::vector<std::filesystem::path>& inputs);

    PipelineConfig config_;
    ProviderBundle& providers_;
    prompts::PromptLibrary prompts_;
    extraction::BatchReport extract_report_;
};

}  // namespace graphrank::pipeline
