#pragma once

#include "graphrank/provider.hpp"

namespace graphrank::provider {

/// Deterministic, offline ModelProvider built on the same prompt formats the
/// pipeline renders. Classification reads embedded "Category: Super > Sub"
/// hints, extraction scans "key: value" statements in the product text,
/// schema generation draws from fixed attribute pools, and ranking/judging
/// score attribute agreement parsed back out of the prompt. Useful as a
/// no-network default for the CLI and as the recording source for replay
/// transcripts; it makes no claim to model-quality output.
class HeuristicProvider : public ModelProvider {
  public:
    HeuristicProvider() = default;

    Json generate(const std::string& prompt, const ResponseSchema& schema) override;
    std::string name() const override { return "heuristic"; }

  private:
    Json classify(const std::string& prompt) const;
    Json schema_gen(const std::string& prompt) const;
    Json extract(const std::string& prompt) const;
    Json rank_graph(const std::string& prompt) const;
    Json rank_raw(const std::string& prompt) const;
    Json judge(const std::string& prompt) const;
};

}  // namespace graphrank::provider
