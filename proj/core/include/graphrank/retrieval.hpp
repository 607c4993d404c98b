#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "graphrank/catalog.hpp"
#include "graphrank/provider.hpp"

namespace graphrank::retrieval {

/// Lowercase, split on non-alphanumeric (ASCII), drop empties. No stemming,
/// no stopwords; duplicates preserved.
std::vector<std::string> tokenize(std::string_view text);

enum class Method { sparse, dense };

struct ScoredId {
    std::string product_id;
    double score = 0.0;

    bool operator==(const ScoredId&) const = default;
};

/// Top-K result of either retrieval method: score-descending, ties broken by
/// product_id ascending, query excluded, at most k_d entries.
struct CandidateSet {
    std::string query_id;  // the excluded id, when one was supplied
    std::vector<ScoredId> entries;
    Method method = Method::dense;
    std::size_t k_d = 0;

    std::vector<std::string> ids() const;
    double score_of(const std::string& product_id) const;  // 0.0 when absent
};

/// Okapi BM25 over tokenize(product_text(record)).
/// score(q,d) = sum_t IDF(t) * tf * (k1+1) / (tf + k1 * (1 - b + b * dl/avgdl))
/// with IDF(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Query terms are
/// deduplicated; only documents matching at least one term are scored.
class SparseIndex {
  public:
    static SparseIndex build(const catalog::ProductStore& store, double k1 = 1.2,
                             double b = 0.75);
    static SparseIndex build(const std::vector<std::pair<std::string, std::string>>& docs,
                             double k1 = 1.2, double b = 0.75);

    CandidateSet search(const std::string& query_text, std::size_t k,
                        const std::string& exclude_id = {}) const;

    std::size_t num_docs() const { return doc_ids_.size(); }
    double avgdl() const { return avgdl_; }
    std::size_t doc_length(std::size_t ordinal) const { return doc_lengths_[ordinal]; }
    std::size_t doc_frequency(const std::string& term) const;
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    double k1() const { return k1_; }
    double b() const { return b_; }

    void save(const std::filesystem::path& path) const;
    static SparseIndex load(const std::filesystem::path& path);

  private:
    struct Posting {
        std::uint32_t doc = 0;
        std::uint32_t tf = 0;
    };
    std::map<std::string, std::vector<Posting>> postings_;  // sorted by doc ordinal
    std::vector<std::uint32_t> doc_lengths_;
    std::vector<std::string> doc_ids_;  // ordinal -> product id, ascending
    double avgdl_ = 0.0;
    double k1_ = 1.2;
    double b_ = 0.75;
};

/// Exact cosine top-K over unit-normalized rows (dot products). The exact
/// scan is normative; IvfIndex below is the optional approximate backend.
class DenseIndex {
  public:
    static DenseIndex build(const catalog::ProductStore& store,
                            provider::EmbeddingProvider& embedder);
    static DenseIndex from_rows(std::vector<std::string> doc_ids, std::vector<float> rows,
                                std::size_t dimension);

    CandidateSet search(std::span<const float> query, std::size_t k,
                        const std::string& exclude_id = {}) const;

    std::size_t size() const { return doc_ids_.size(); }
    std::size_t dimension() const { return dimension_; }
    std::span<const float> row(std::size_t ordinal) const;
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }

    /// Header JSON line {"n","dim"} + row-major little-endian float32 payload.
    void save(const std::filesystem::path& path) const;
    static DenseIndex load(const std::filesystem::path& path);

  private:
    std::vector<float> rows_;  // n * dim, row-major
    std::vector<std::string> doc_ids_;
    std::size_t dimension_ = 0;
};

/// IVF-flat approximate search: k-means coarse quantizer, probe the nprobe
/// nearest lists, exact scan within. Must reach recall@k >= 0.95 against the
/// exact scan to be considered a faithful backend.
class IvfIndex {
  public:
    IvfIndex(const DenseIndex& base, std::size_t n_lists, std::uint64_t seed = 1,
             std::size_t kmeans_iters = 8);

    CandidateSet search(std::span<const float> query, std::size_t k, std::size_t nprobe,
                        const std::string& exclude_id = {}) const;

    std::size_t n_lists() const { return centroids_.size() / dimension_; }

  private:
    const DenseIndex& base_;
    std::size_t dimension_;
    std::vector<float> centroids_;                  // n_lists * dim
    std::vector<std::vector<std::uint32_t>> lists_;  // centroid -> row ordinals
};

}  // namespace graphrank::retrieval
