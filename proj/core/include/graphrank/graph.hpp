#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "graphrank/extraction.hpp"

namespace graphrank::graph {

/// Bipartite graph: product nodes on one side, attribute nodes on the other,
/// attribute values as edge labels. The edge key is (product, attribute), so
/// bipartiteness holds by construction and val(p, a) is a partial function.
/// Immutable after build; rebuilds swap whole instances.
class AttributeGraph {
  public:
    static AttributeGraph build(const extraction::AttributeStore& store);

    std::size_t product_count() const { return adjacency_.size(); }
    std::size_t attribute_count() const { return attributes_.size(); }
    std::size_t edge_count() const;

    bool has_product(const std::string& product_id) const {
        return adjacency_.count(product_id) > 0;
    }
    bool has_attribute(const std::string& name) const { return attributes_.count(name) > 0; }

    /// Attribute -> value map of one product; throws NotFoundError.
    const std::map<std::string, std::string>& attributes_of(const std::string& product_id) const;

    /// Products carrying the attribute (the by_attribute inverse index).
    const std::set<std::string>& products_with(const std::string& attribute) const;

    std::optional<std::string> value(const std::string& product_id,
                                     const std::string& attribute) const;

    std::vector<std::string> product_ids() const;
    const std::set<std::string>& attribute_names() const { return attributes_; }

    /// Header line with counts, then one JSONL edge per line; isolated nodes
    /// (legal: a product with zero extracted pairs) follow as {"p"} / {"a"}
    /// records so round-trips preserve the exact node sets.
    void save(const std::filesystem::path& path) const;
    static AttributeGraph load(const std::filesystem::path& path);

    bool operator==(const AttributeGraph&) const = default;

  private:
    std::map<std::string, std::map<std::string, std::string>> adjacency_;
    std::set<std::string> attributes_;
    std::map<std::string, std::set<std::string>> by_attribute_;
    static const std::set<std::string> kEmptySet;
};

/// Restriction of the graph to a query, its candidates, and every attribute
/// they touch. Candidate order is the retrieval order. `attribute_order`
/// carries the resolved schema order so triple rendering is stable.
struct LocalSubgraph {
    std::string query_id;
    std::vector<std::string> candidate_ids;
    std::set<std::string> attribute_nodes;
    std::map<std::string, std::map<std::string, std::string>> edges;  // product -> attr -> value
    std::vector<std::string> attribute_order;

    const std::map<std::string, std::string>& attributes_of(const std::string& product_id) const;
};

LocalSubgraph local_subgraph(const AttributeGraph& graph, const std::string& query_id,
                             const std::vector<std::string>& candidate_ids,
                             std::vector<std::string> attribute_order = {});

/// Variant for queries extracted online that are not in the offline graph:
/// the query's edges come from `query_set` instead (graph edges win if the
/// product also exists offline).
LocalSubgraph local_subgraph(const AttributeGraph& graph,
                             const extraction::AttributeSet& query_set,
                             const std::vector<std::string>& candidate_ids,
                             std::vector<std::string> attribute_order = {});

struct Triple {
    std::string attribute;
    std::string query_value;
    std::optional<std::string> candidate_value;  // nullopt = candidate lacks the edge

    bool operator==(const Triple&) const = default;
};

/// One triple per attribute the query has, schema order first, then
/// lexicographic for discovered attributes. Attributes the candidate lacks
/// appear with an absent value so the ranker sees mismatches too.
std::vector<Triple> shared_triples(const LocalSubgraph& subgraph,
                                   const std::string& candidate_id);

}  // namespace graphrank::graph
