#include "graphrank/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "graphrank/errors.hpp"
#include "graphrank/hash.hpp"
#include "graphrank/text.hpp"

namespace graphrank::retrieval {

std::vector<std::string> tokenize(std::string_view input) {
    std::vector<std::string> terms;
    std::string current;
    for (char c : input) {
        if (text::is_ascii_alnum(static_cast<unsigned char>(c))) {
            current.push_back(text::to_lower_ascii(c));
        } else if (!current.empty()) {
            terms.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) terms.push_back(std::move(current));
    return terms;
}

std::vector<std::string> CandidateSet::ids() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.product_id);
    return out;
}

double CandidateSet::score_of(const std::string& product_id) const {
    for (const auto& e : entries) {
        if (e.product_id == product_id) return e.score;
    }
    return 0.0;
}

namespace {

/// Shared top-K selection with the canonical tie rule.
void sort_and_clamp(std::vector<ScoredId>& entries, std::size_t k) {
    std::sort(entries.begin(), entries.end(), [](const ScoredId& a, const ScoredId& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.product_id < b.product_id;
    });
    if (entries.size() > k) entries.resize(k);
}

}  // namespace

SparseIndex SparseIndex::build(const catalog::ProductStore& store, double k1, double b) {
    std::vector<std::pair<std::string, std::string>> docs;
    docs.reserve(store.size());
    for (const auto& id : store.ids()) {
        docs.emplace_back(id, catalog::product_text(store.get(id)));
    }
    return build(docs, k1, b);
}

SparseIndex SparseIndex::build(const std::vector<std::pair<std::string, std::string>>& docs,
                               double k1, double b) {
    SparseIndex index;
    index.k1_ = k1;
    index.b_ = b;

    std::vector<std::pair<std::string, std::string>> sorted = docs;
    std::sort(sorted.begin(), sorted.end());

    std::uint64_t total_len = 0;
    for (std::uint32_t ordinal = 0; ordinal < sorted.size(); ++ordinal) {
        const auto& [id, body] = sorted[ordinal];
        auto terms = tokenize(body);
        index.doc_ids_.push_back(id);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
        total_len += terms.size();

        std::map<std::string, std::uint32_t> tf;
        for (const auto& term : terms) ++tf[term];
        for (const auto& [term, freq] : tf) {
            index.postings_[term].push_back({ordinal, freq});
        }
    }
    index.avgdl_ = index.doc_ids_.empty()
                       ? 0.0
                       : static_cast<double>(total_len) / static_cast<double>(index.doc_ids_.size());
    return index;
}

std::size_t SparseIndex::doc_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

CandidateSet SparseIndex::search(const std::string& query_text, std::size_t k,
                                 const std::string& exclude_id) const {
    CandidateSet result;
    result.query_id = exclude_id;
    result.method = Method::sparse;
    result.k_d = k;
    if (k == 0 || doc_ids_.empty()) return result;

    auto terms = tokenize(query_text);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    const double n = static_cast<double>(doc_ids_.size());
    std::map<std::uint32_t, double> scores;
    for (const auto& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& posting : it->second) {
            const double tf = static_cast<double>(posting.tf);
            const double dl = static_cast<double>(doc_lengths_[posting.doc]);
            const double denom = tf + k1_ * (1.0 - b_ + b_ * dl / avgdl_);
            scores[posting.doc] += idf * tf * (k1_ + 1.0) / denom;
        }
    }

    result.entries.reserve(scores.size());
    for (const auto& [doc, score] : scores) {
        if (doc_ids_[doc] == exclude_id) continue;
        result.entries.push_back({doc_ids_[doc], score});
    }
    sort_and_clamp(result.entries, k);
    return result;
}

void SparseIndex::save(const std::filesystem::path& path) const {
    Json postings = Json::object();
    for (const auto& [term, list] : postings_) {
        Json rows = Json::array();
        for (const auto& p : list) rows.push_back(Json::array({p.doc, p.tf}));
        postings[term] = std::move(rows);
    }
    Json j{{"doc_ids", doc_ids_}, {"doc_lengths", doc_lengths_}, {"avgdl", avgdl_},
           {"k1", k1_},           {"b", b_},                     {"postings", std::move(postings)}};
    write_file(path, dump_line(j) + "\n");
}

SparseIndex SparseIndex::load(const std::filesystem::path& path) {
    Json j = parse_json(read_file(path), "sparse index " + path.string());
    SparseIndex index;
    index.doc_ids_ = j.at("doc_ids").get<std::vector<std::string>>();
    index.doc_lengths_ = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
    index.avgdl_ = j.at("avgdl").get<double>();
    index.k1_ = j.at("k1").get<double>();
    index.b_ = j.at("b").get<double>();
    for (const auto& [term, rows] : j.at("postings").items()) {
        auto& list = index.postings_[term];
        for (const auto& row : rows) {
            list.push_back({row.at(0).get<std::uint32_t>(), row.at(1).get<std::uint32_t>()});
        }
    }
    return index;
}

DenseIndex DenseIndex::build(const catalog::ProductStore& store,
                             provider::EmbeddingProvider& embedder) {
    DenseIndex index;
    index.dimension_ = embedder.dimension();
    index.doc_ids_ = store.ids();
    index.rows_.reserve(index.doc_ids_.size() * index.dimension_);
    for (const auto& id : index.doc_ids_) {
        auto v = provider::embed_text(embedder, catalog::product_text(store.get(id)));
        index.rows_.insert(index.rows_.end(), v.begin(), v.end());
    }
    return index;
}

DenseIndex DenseIndex::from_rows(std::vector<std::string> doc_ids, std::vector<float> rows,
                                 std::size_t dimension) {
    if (dimension == 0 || rows.size() != doc_ids.size() * dimension) {
        throw Error("dense index shape mismatch");
    }
    for (std::size_t i = 0; i < doc_ids.size(); ++i) {
        double norm_sq = 0.0;
        for (std::size_t d = 0; d < dimension; ++d) {
            norm_sq += static_cast<double>(rows[i * dimension + d]) * rows[i * dimension + d];
        }
        if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-6) {
            throw Error("dense index row " + doc_ids[i] + " is not unit-normalized");
        }
    }
    DenseIndex index;
    index.doc_ids_ = std::move(doc_ids);
    index.rows_ = std::move(rows);
    index.dimension_ = dimension;
    return index;
}

std::span<const float> DenseIndex::row(std::size_t ordinal) const {
    return {rows_.data() + ordinal * dimension_, dimension_};
}

CandidateSet DenseIndex::search(std::span<const float> query, std::size_t k,
                                const std::string& exclude_id) const {
    if (query.size() != dimension_) {
        throw Error("query dimension " + std::to_string(query.size()) + " != index dimension " +
                    std::to_string(dimension_));
    }
    CandidateSet result;
    result.query_id = exclude_id;
    result.method = Method::dense;
    result.k_d = k;
    if (k == 0) return result;

    result.entries.reserve(doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        if (doc_ids_[i] == exclude_id) continue;
        const float* r = rows_.data() + i * dimension_;
        double dot = 0.0;
        for (std::size_t d = 0; d < dimension_; ++d) {
            dot += static_cast<double>(r[d]) * static_cast<double>(query[d]);
        }
        result.entries.push_back({doc_ids_[i], dot});
    }
    sort_and_clamp(result.entries, k);
    return result;
}

namespace {

void append_le32(std::string& out, std::uint32_t bits) {
    out.push_back(static_cast<char>(bits & 0xff));
    out.push_back(static_cast<char>((bits >> 8) & 0xff));
    out.push_back(static_cast<char>((bits >> 16) & 0xff));
    out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

std::uint32_t read_le32(const char* p) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24;
}

}  // namespace

void DenseIndex::save(const std::filesystem::path& path) const {
    std::string out = dump_line(Json{{"n", doc_ids_.size()},
                                     {"dim", dimension_},
                                     {"doc_ids", doc_ids_}});
    out += '\n';
    out.reserve(out.size() + rows_.size() * 4);
    for (float f : rows_) append_le32(out, std::bit_cast<std::uint32_t>(f));
    write_file(path, out);
}

DenseIndex DenseIndex::load(const std::filesystem::path& path) {
    std::string content = read_file(path);
    std::size_t eol = content.find('\n');
    if (eol == std::string::npos) throw ParseError("dense index missing header: " + path.string());

    Json header = parse_json(content.substr(0, eol), "dense index header");
    std::size_t n = header.at("n").get<std::size_t>();
    std::size_t dim = header.at("dim").get<std::size_t>();
    auto doc_ids = header.at("doc_ids").get<std::vector<std::string>>();
    if (doc_ids.size() != n) throw ParseError("dense index id count mismatch");

    std::size_t payload = content.size() - eol - 1;
    if (payload != n * dim * 4) {
        throw ParseError("dense index payload is " + std::to_string(payload) +
                         " bytes, expected " + std::to_string(n * dim * 4));
    }
    std::vector<float> rows(n * dim);
    const char* p = content.data() + eol + 1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i] = std::bit_cast<float>(read_le32(p + i * 4));
    }
    return from_rows(std::move(doc_ids), std::move(rows), dim);
}

IvfIndex::IvfIndex(const DenseIndex& base, std::size_t n_lists, std::uint64_t seed,
                   std::size_t kmeans_iters)
    : base_(base), dimension_(base.dimension()) {
    const std::size_t n = base.size();
    n_lists = std::max<std::size_t>(1, std::min(n_lists, n));

    // Seed centroids with distinct rows chosen by a stable RNG.
    SplitMix64 rng(seed);
    std::vector<std::size_t> pick(n);
    for (std::size_t i = 0; i < n; ++i) pick[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::swap(pick[i - 1], pick[rng.next_below(i)]);
    }
    centroids_.resize(n_lists * dimension_);
    for (std::size_t c = 0; c < n_lists; ++c) {
        auto r = base.row(pick[c]);
        std::copy(r.begin(), r.end(), centroids_.begin() + c * dimension_);
    }

    std::vector<std::uint32_t> assign(n, 0);
    for (std::size_t iter = 0; iter < kmeans_iters; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            auto r = base.row(i);
            double best = -2.0;
            std::uint32_t best_c = 0;
            for (std::size_t c = 0; c < n_lists; ++c) {
                double dot = 0.0;
                for (std::size_t d = 0; d < dimension_; ++d) {
                    dot += static_cast<double>(centroids_[c * dimension_ + d]) * r[d];
                }
                if (dot > best) {
                    best = dot;
                    best_c = static_cast<std::uint32_t>(c);
                }
            }
            assign[i] = best_c;
        }
        // Recompute centroids as normalized means; empty lists keep theirs.
        std::vector<double> sums(n_lists * dimension_, 0.0);
        std::vector<std::size_t> counts(n_lists, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto r = base.row(i);
            for (std::size_t d = 0; d < dimension_; ++d) {
                sums[assign[i] * dimension_ + d] += r[d];
            }
            ++counts[assign[i]];
        }
        for (std::size_t c = 0; c < n_lists; ++c) {
            if (counts[c] == 0) continue;
            double norm_sq = 0.0;
            for (std::size_t d = 0; d < dimension_; ++d) {
                norm_sq += sums[c * dimension_ + d] * sums[c * dimension_ + d];
            }
            double norm = std::sqrt(norm_sq);
            if (norm == 0.0) continue;
            for (std::size_t d = 0; d < dimension_; ++d) {
                centroids_[c * dimension_ + d] =
                    static_cast<float>(sums[c * dimension_ + d] / norm);
            }
        }
    }

    lists_.assign(n_lists, {});
    for (std::size_t i = 0; i < n; ++i) {
        lists_[assign[i]].push_back(static_cast<std::uint32_t>(i));
    }
}

CandidateSet IvfIndex::search(std::span<const float> query, std::size_t k, std::size_t nprobe,
                              const std::string& exclude_id) const {
    if (query.size() != dimension_) throw Error("query dimension mismatch");
    const std::size_t nl = lists_.size();
    nprobe = std::max<std::size_t>(1, std::min(nprobe, nl));

    std::vector<std::pair<double, std::size_t>> centroid_scores(nl);
    for (std::size_t c = 0; c < nl; ++c) {
        double dot = 0.0;
        for (std::size_t d = 0; d < dimension_; ++d) {
            dot += static_cast<double>(centroids_[c * dimension_ + d]) * query[d];
        }
        centroid_scores[c] = {dot, c};
    }
    std::sort(centroid_scores.begin(), centroid_scores.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    CandidateSet result;
    result.query_id = exclude_id;
    result.method = Method::dense;
    result.k_d = k;
    for (std::size_t p = 0; p < nprobe; ++p) {
        for (std::uint32_t ordinal : lists_[centroid_scores[p].second]) {
            const auto& id = base_.doc_ids()[ordinal];
            if (id == exclude_id) continue;
            auto r = base_.row(ordinal);
            double dot = 0.0;
            for (std::size_t d = 0; d < dimension_; ++d) {
                dot += static_cast<double>(r[d]) * static_cast<double>(query[d]);
            }
            result.entries.push_back({id, dot});
        }
    }
    sort_and_clamp(result.entries, k);
    return result;
}

}  // namespace graphrank::retrieval
