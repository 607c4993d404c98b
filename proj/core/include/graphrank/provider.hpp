#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graphrank/errors.hpp"
#include "graphrank/json_util.hpp"

namespace graphrank::provider {

/// Identifies and validates the structured payload a prompt expects.
/// `name` is part of the request fingerprint, so renaming a schema
/// invalidates recorded transcripts on purpose.
struct ResponseSchema {
    std::string name;
    std::function<std::optional<std::string>(const Json&)> validate;

    std::optional<std::string> check(const Json& payload) const {
        return validate ? validate(payload) : std::nullopt;
    }
};

struct ProviderSettings {
    // Generation temperature is pinned to 0 and is intentionally not a field:
    // every transport sends the constant below.
    static constexpr double kTemperature = 0.0;

    int max_retries = 3;  // total attempts per call
    std::chrono::milliseconds timeout{10000};
    std::chrono::milliseconds backoff_base{200};
    double backoff_multiplier = 4.0;
    std::uint64_t jitter_seed = 0;  // 0 = seed from the clock
};

/// Chat-style structured generation. Implementations throw ProviderError.
class ModelProvider {
  public:
    virtual ~ModelProvider() = default;

    /// One raw round-trip; no retries, no validation.
    virtual Json generate(const std::string& prompt, const ResponseSchema& schema) = 0;

    virtual std::string name() const = 0;
};

class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;

    /// Unit-L2-normalized vector of `dimension()` floats.
    virtual std::vector<float> embed(std::string_view text) = 0;

    virtual std::size_t dimension() const = 0;
};

/// Stable request fingerprint: fnv1a64 over schema name + prompt text.
std::string fingerprint(const std::string& prompt, const ResponseSchema& schema);

/// Append-only, thread-safe log of raw exchanges. A log captured against a
/// live provider can be loaded into a ScriptedProvider and replayed.
class TranscriptLog {
  public:
    struct Entry {
        std::string fingerprint;
        Json payload;
    };

    void record(std::string fp, Json payload);
    std::vector<Entry> entries() const;
    std::size_t size() const;

    void save(const std::filesystem::path& path) const;
    static std::vector<Entry> load(const std::filesystem::path& path);

  private:
    mutable std::mutex mu_;
    std::vector<Entry> entries_;
};

struct StructuredResult {
    Json payload;
    int repair_count = 0;
    std::string fingerprint;
};

/// Validated structured generation: retries transport/timeout failures with
/// exponential backoff and full jitter, re-prompts once with the validation
/// error appended when the payload fails the schema, and records every raw
/// exchange in `log` when given.
StructuredResult generate_structured(ModelProvider& provider, const std::string& prompt,
                                     const ResponseSchema& schema,
                                     const ProviderSettings& settings = {},
                                     TranscriptLog* log = nullptr);

/// Deterministic test double keyed by request fingerprint.
class ScriptedProvider : public ModelProvider {
  public:
    explicit ScriptedProvider(bool strict = true) : strict_(strict) {}

    void script(const std::string& fp, Json payload);
    /// Makes the next `times` calls for `fp` throw the given error kind
    /// before any scripted payload is served.
    void script_error(const std::string& fp, ProviderError::Kind kind,
                      int times = std::numeric_limits<int>::max());
    void load_transcript(const std::filesystem::path& path);

    Json generate(const std::string& prompt, const ResponseSchema& schema) override;
    std::string name() const override { return "scripted"; }

    std::size_t calls() const;
    std::vector<std::string> unmatched_fingerprints() const;

  private:
    mutable std::mutex mu_;
    bool strict_;
    std::size_t calls_ = 0;
    std::map<std::string, Json> transcript_;
    std::map<std::string, std::pair<ProviderError::Kind, int>> errors_;
    std::vector<std::string> unmatched_;
};

/// Character-trigram feature hashing into `dimension` signed buckets,
/// L2-normalized. Texts are padded with '^' and '$' sentinels so every
/// non-empty input yields at least one trigram. Pure in (text, seed, dim);
/// all-zero accumulations (empty text) map to e_0.
std::vector<float> hash_embed(std::string_view text, std::size_t dimension, std::uint64_t seed);

class HashEmbedder : public EmbeddingProvider {
  public:
    explicit HashEmbedder(std::size_t dimension = 64, std::uint64_t seed = 0)
        : dimension_(dimension), seed_(seed) {}

    std::vector<float> embed(std::string_view text) override {
        return hash_embed(text, dimension_, seed_);
    }
    std::size_t dimension() const override { return dimension_; }
    std::uint64_t seed() const { return seed_; }

  private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

/// Embedding entry point used by the pipelines: empty text maps to the basis
/// vector e_0 without touching the provider, and the result is re-normalized
/// so downstream cosine math can rely on unit vectors.
std::vector<float> embed_text(EmbeddingProvider& provider, std::string_view text);

/// Token bucket; acquire() blocks until a token is available.
class RateLimiter {
  public:
    RateLimiter(double requests_per_sec, double burst = 1.0);
    void acquire();

  private:
    std::mutex mu_;
    double rate_;
    double burst_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
};

/// Decorator applying a per-instance token bucket to a shared provider.
class RateLimitedProvider : public ModelProvider {
  public:
    RateLimitedProvider(ModelProvider& inner, double requests_per_sec, double burst = 1.0)
        : inner_(inner), limiter_(requests_per_sec, burst) {}

    Json generate(const std::string& prompt, const ResponseSchema& schema) override {
        limiter_.acquire();
        return inner_.generate(prompt, schema);
    }
    std::string name() const override { return inner_.name() + "+ratelimit"; }

  private:
    ModelProvider& inner_;
    RateLimiter limiter_;
};

}  // namespace graphrank::provider
