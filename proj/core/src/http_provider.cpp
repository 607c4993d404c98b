#include "graphrank/http_provider.hpp"

#include <httplib.h>

namespace graphrank::provider {

HttpProvider::HttpProvider(std::string endpoint, std::chrono::milliseconds timeout,
                           std::string api_key)
    : timeout_(timeout), api_key_(std::move(api_key)) {
    std::size_t scheme = endpoint.find("://");
    std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
    std::size_t slash = endpoint.find('/', host_start);
    if (slash == std::string::npos) {
        base_ = endpoint;
        path_ = "/v1/generate";
    } else {
        base_ = endpoint.substr(0, slash);
        path_ = endpoint.substr(slash);
    }
}

Json HttpProvider::generate(const std::string& prompt, const ResponseSchema& schema) {
    httplib::Client client(base_);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout_));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout_));
    if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

    Json body{{"prompt", prompt},
              {"schema", Json{{"name", schema.name}}},
              {"temperature", ProviderSettings::kTemperature}};
    auto res = client.Post(path_, body.dump(), "application/json");

    if (!res) {
        auto kind = res.error() == httplib::Error::ConnectionTimeout ||
                            res.error() == httplib::Error::Read
                        ? ProviderError::Kind::timeout
                        : ProviderError::Kind::transport;
        throw ProviderError(kind, "request to " + base_ + path_ + " failed: " +
                                      httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw ProviderError(ProviderError::Kind::transport,
                            "gateway returned status " + std::to_string(res->status));
    }
    Json parsed = Json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("payload")) {
        throw ProviderError(ProviderError::Kind::transport,
                            "gateway response is not {\"payload\": ...}");
    }
    return parsed["payload"];
}

}  // namespace graphrank::provider
