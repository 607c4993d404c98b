#include "graphrank/provider.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "graphrank/hash.hpp"

namespace graphrank::provider {

std::string fingerprint(const std::string& prompt, const ResponseSchema& schema) {
    std::uint64_t h = fnv1a64(schema.name);
    h = fnv1a64("\n", h);
    h = fnv1a64(prompt, h);
    return hex64(h);
}

void TranscriptLog::record(std::string fp, Json payload) {
    std::lock_guard lock(mu_);
    entries_.push_back({std::move(fp), std::move(payload)});
}

std::vector<TranscriptLog::Entry> TranscriptLog::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

std::size_t TranscriptLog::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

void TranscriptLog::save(const std::filesystem::path& path) const {
    std::string out;
    for (const auto& e : entries()) {
        Json row{{"fingerprint", e.fingerprint}, {"payload", e.payload}};
        out += dump_line(row);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<TranscriptLog::Entry> TranscriptLog::load(const std::filesystem::path& path) {
    std::vector<Entry> entries;
    for_each_line(path, [&](std::size_t line, std::string_view text) {
        Json row = Json::parse(text, nullptr, false);
        if (row.is_discarded() || !row.is_object() || !row.contains("fingerprint") ||
            !row.contains("payload")) {
            throw ParseError("bad transcript row", line);
        }
        entries.push_back({row["fingerprint"].get<std::string>(), row["payload"]});
    });
    return entries;
}

namespace {

std::chrono::milliseconds backoff_delay(const ProviderSettings& settings, int attempt,
                                        SplitMix64& rng) {
    double cap = static_cast<double>(settings.backoff_base.count()) *
                 std::pow(settings.backoff_multiplier, attempt);
    // Full jitter: uniform in [0, cap].
    return std::chrono::milliseconds(static_cast<long>(rng.next_double() * cap));
}

}  // namespace

StructuredResult generate_structured(ModelProvider& provider, const std::string& prompt,
                                     const ResponseSchema& schema,
                                     const ProviderSettings& settings, TranscriptLog* log) {
    std::uint64_t seed = settings.jitter_seed != 0
                             ? settings.jitter_seed
                             : static_cast<std::uint64_t>(
                                   std::chrono::steady_clock::now().time_since_epoch().count());
    SplitMix64 rng(seed);

    auto call_with_retries = [&](const std::string& p) -> Json {
        int attempts = std::max(1, settings.max_retries);
        for (int attempt = 0;; ++attempt) {
            try {
                Json payload = provider.generate(p, schema);
                if (log) log->record(fingerprint(p, schema), payload);
                return payload;
            } catch (const ProviderError& e) {
                if (!e.retryable() || attempt + 1 >= attempts) throw;
                std::this_thread::sleep_for(backoff_delay(settings, attempt, rng));
            }
        }
    };

    StructuredResult result;
    result.fingerprint = fingerprint(prompt, schema);
    result.payload = call_with_retries(prompt);

    auto error = schema.check(result.payload);
    if (!error) return result;

    // One repair round-trip with the validation error appended.
    std::string repair_prompt = prompt +
                                "\n\nThe previous response failed validation: " + *error +
                                "\nRespond again with JSON matching the required shape.";
    result.payload = call_with_retries(repair_prompt);
    result.repair_count = 1;

    error = schema.check(result.payload);
    if (error) {
        throw ProviderError(ProviderError::Kind::validation,
                            "payload failed schema '" + schema.name + "' after repair: " + *error);
    }
    return result;
}

void ScriptedProvider::script(const std::string& fp, Json payload) {
    std::lock_guard lock(mu_);
    transcript_.emplace(fp, std::move(payload));  // first occurrence wins
}

void ScriptedProvider::script_error(const std::string& fp, ProviderError::Kind kind, int times) {
    std::lock_guard lock(mu_);
    errors_[fp] = {kind, times};
}

void ScriptedProvider::load_transcript(const std::filesystem::path& path) {
    for (auto& e : TranscriptLog::load(path)) script(e.fingerprint, std::move(e.payload));
}

Json ScriptedProvider::generate(const std::string& prompt, const ResponseSchema& schema) {
    std::string fp = fingerprint(prompt, schema);
    std::lock_guard lock(mu_);
    ++calls_;

    if (auto it = errors_.find(fp); it != errors_.end() && it->second.second > 0) {
        --it->second.second;
        throw ProviderError(it->second.first, "scripted failure for " + fp);
    }
    if (auto it = transcript_.find(fp); it != transcript_.end()) return it->second;

    unmatched_.push_back(fp);
    if (strict_) {
        throw ProviderError(ProviderError::Kind::unscripted,
                            "unscripted request " + fp + " (schema " + schema.name + ")");
    }
    return Json::object();
}

std::size_t ScriptedProvider::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::vector<std::string> ScriptedProvider::unmatched_fingerprints() const {
    std::lock_guard lock(mu_);
    return unmatched_;
}

namespace {
constexpr std::uint64_t kBucketSalt = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kSignSalt = 0xc2b2ae3d27d4eb4full;

std::vector<float> basis_e0(std::size_t dimension) {
    std::vector<float> v(dimension, 0.0f);
    v[0] = 1.0f;
    return v;
}
}  // namespace

std::vector<float> hash_embed(std::string_view text, std::size_t dimension, std::uint64_t seed) {
    if (dimension < 2) throw Error("hash_embed requires dimension >= 2");

    std::string padded;
    padded.reserve(text.size() + 2);
    padded.push_back('^');
    padded.append(text);
    padded.push_back('$');

    std::vector<double> acc(dimension, 0.0);
    if (padded.size() >= 3) {
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            std::string_view tri(padded.data() + i, 3);
            std::uint64_t bucket = fnv1a64(tri, kFnvOffsetBasis ^ seed ^ kBucketSalt) % dimension;
            std::uint64_t sign = fnv1a64(tri, kFnvOffsetBasis ^ seed ^ kSignSalt) & 1;
            acc[bucket] += sign ? 1.0 : -1.0;
        }
    }

    double norm_sq = 0.0;
    for (double x : acc) norm_sq += x * x;
    if (norm_sq == 0.0) return basis_e0(dimension);

    double norm = std::sqrt(norm_sq);
    std::vector<float> out(dimension);
    for (std::size_t i = 0; i < dimension; ++i) {
        out[i] = static_cast<float>(acc[i] / norm);
    }
    return out;
}

std::vector<float> embed_text(EmbeddingProvider& provider, std::string_view text) {
    if (text.empty()) return basis_e0(provider.dimension());

    std::vector<float> v = provider.embed(text);
    if (v.size() != provider.dimension()) {
        throw Error("embedding dimension mismatch: got " + std::to_string(v.size()) +
                    ", provider declares " + std::to_string(provider.dimension()));
    }
    double norm_sq = 0.0;
    for (float x : v) norm_sq += static_cast<double>(x) * x;
    if (norm_sq == 0.0) return basis_e0(provider.dimension());

    double norm = std::sqrt(norm_sq);
    for (float& x : v) x = static_cast<float>(x / norm);
    return v;
}

RateLimiter::RateLimiter(double requests_per_sec, double burst)
    : rate_(requests_per_sec), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {
    if (requests_per_sec <= 0.0) throw ConfigError("rate limit must be positive");
}

void RateLimiter::acquire() {
    std::unique_lock lock(mu_);
    while (true) {
        auto now = std::chrono::steady_clock::now();
        double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        double wait_s = (1.0 - tokens_) / rate_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
        lock.lock();
    }
}

}  // namespace graphrank::provider
