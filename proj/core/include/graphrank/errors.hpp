#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace graphrank {

/// Base class for all graphrank errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

/// Parse failure in a catalog, graph, index, or transcript file.
/// Carries the 1-based line number when known (0 = unknown).
class ParseError : public Error {
  public:
    explicit ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

class NotFoundError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Raised by model/embedding providers and their wrappers.
class ProviderError : public Error {
  public:
    enum class Kind {
        transport,   // connection refused, non-2xx, malformed body
        timeout,     // deadline exceeded
        unscripted,  // strict ScriptedProvider hit an unknown fingerprint
        validation,  // payload failed the response schema after repair
    };

    ProviderError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}

    Kind kind() const { return kind_; }

    /// Transport and timeout failures are retried; the rest are not.
    bool retryable() const { return kind_ == Kind::transport || kind_ == Kind::timeout; }

  private:
    Kind kind_;
};

}  // namespace graphrank
