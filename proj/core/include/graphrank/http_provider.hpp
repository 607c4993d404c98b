#pragma once

#include <chrono>
#include <string>

#include "graphrank/provider.hpp"

namespace graphrank::provider {

/// Generic HTTP gateway transport: POST {"prompt", "schema": {"name"},
/// "temperature": 0} to the endpoint, expect {"payload": {...}} back.
/// Vendor-specific adapters live behind the gateway, outside this core.
class HttpProvider : public ModelProvider {
  public:
    explicit HttpProvider(std::string endpoint,
                          std::chrono::milliseconds timeout = std::chrono::milliseconds(10000),
                          std::string api_key = {});

    Json generate(const std::string& prompt, const ResponseSchema& schema) override;
    std::string name() const override { return "http"; }

  private:
    std::string base_;  // scheme://host[:port]
    std::string path_;
    std::chrono::milliseconds timeout_;
    std::string api_key_;
};

}  // namespace graphrank::provider
