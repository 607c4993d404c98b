#include "graphrank/graph.hpp"

#include <algorithm>

#include "graphrank/errors.hpp"
#include "graphrank/json_util.hpp"
#include "graphrank/text.hpp"

namespace graphrank::graph {

const std::set<std::string> AttributeGraph::kEmptySet{};

AttributeGraph AttributeGraph::build(const extraction::AttributeStore& store) {
    AttributeGraph g;
    for (const auto& id : store.ids()) {
        auto set = store.find(id);
        auto& edges = g.adjacency_[id];  // product node exists even with zero pairs
        for (const auto& [attr, value] : set->pairs) {
            edges[attr] = value;
            g.attributes_.insert(attr);
            g.by_attribute_[attr].insert(id);
        }
    }
    return g;
}

std::size_t AttributeGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& [id, edges] : adjacency_) {
        (void)id;
        n += edges.size();
    }
    return n;
}

const std::map<std::string, std::string>& AttributeGraph::attributes_of(
    const std::string& product_id) const {
    auto it = adjacency_.find(product_id);
    if (it == adjacency_.end()) throw NotFoundError("product not in graph: " + product_id);
    return it->second;
}

const std::set<std::string>& AttributeGraph::products_with(const std::string& attribute) const {
    auto it = by_attribute_.find(attribute);
    return it == by_attribute_.end() ? kEmptySet : it->second;
}

std::optional<std::string> AttributeGraph::value(const std::string& product_id,
                                                 const std::string& attribute) const {
    auto it = adjacency_.find(product_id);
    if (it == adjacency_.end()) return std::nullopt;
    auto jt = it->second.find(attribute);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
}

std::vector<std::string> AttributeGraph::product_ids() const {
    std::vector<std::string> out;
    out.reserve(adjacency_.size());
    for (const auto& [id, edges] : adjacency_) {
        out.push_back(id);
        (void)edges;
    }
    return out;
}

void AttributeGraph::save(const std::filesystem::path& path) const {
    std::string out;
    out += dump_line(Json{{"products", product_count()},
                          {"attributes", attribute_count()},
                          {"edges", edge_count()}});
    out += '\n';
    for (const auto& [id, edges] : adjacency_) {
        for (const auto& [attr, value] : edges) {
            out += dump_line(Json{{"p", id}, {"a", attr}, {"v", value}});
            out += '\n';
        }
    }
    for (const auto& [id, edges] : adjacency_) {
        if (edges.empty()) {
            out += dump_line(Json{{"p", id}});
            out += '\n';
        }
    }
    for (const auto& attr : attributes_) {
        if (by_attribute_.count(attr) == 0 || by_attribute_.at(attr).empty()) {
            out += dump_line(Json{{"a", attr}});
            out += '\n';
        }
    }
    write_file(path, out);
}

AttributeGraph AttributeGraph::load(const std::filesystem::path& path) {
    AttributeGraph g;
    std::size_t declared_products = 0, declared_attributes = 0, declared_edges = 0;
    std::size_t edges_seen = 0;
    bool header_seen = false;

    for_each_line(path, [&](std::size_t line, std::string_view text_line) {
        Json row = Json::parse(text_line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            throw ParseError("bad graph row", line);
        }
        if (!header_seen) {
            if (!row.contains("products") || !row.contains("attributes") ||
                !row.contains("edges")) {
                throw ParseError("graph file must start with a counts header", line);
            }
            declared_products = row["products"].get<std::size_t>();
            declared_attributes = row["attributes"].get<std::size_t>();
            declared_edges = row["edges"].get<std::size_t>();
            header_seen = true;
            return;
        }
        bool has_p = row.contains("p");
        bool has_a = row.contains("a");
        if (has_p && has_a) {
            if (!row.contains("v")) throw ParseError("edge row missing value", line);
            std::string p = row["p"].get<std::string>();
            std::string a = row["a"].get<std::string>();
            g.adjacency_[p][a] = row["v"].get<std::string>();
            g.attributes_.insert(a);
            g.by_attribute_[a].insert(p);
            ++edges_seen;
        } else if (has_p) {
            g.adjacency_[row["p"].get<std::string>()];
        } else if (has_a) {
            g.attributes_.insert(row["a"].get<std::string>());
        } else {
            throw ParseError("graph row is neither edge nor node", line);
        }
    });

    if (!header_seen) throw ParseError("empty graph file: " + path.string());
    if (edges_seen != declared_edges || g.product_count() != declared_products ||
        g.attribute_count() != declared_attributes) {
        throw ParseError("graph file truncated or corrupt: header declares " +
                         std::to_string(declared_products) + "/" +
                         std::to_string(declared_attributes) + "/" +
                         std::to_string(declared_edges) + " products/attributes/edges, found " +
                         std::to_string(g.product_count()) + "/" +
                         std::to_string(g.attribute_count()) + "/" + std::to_string(edges_seen));
    }
    return g;
}

const std::map<std::string, std::string>& LocalSubgraph::attributes_of(
    const std::string& product_id) const {
    auto it = edges.find(product_id);
    if (it == edges.end()) throw NotFoundError("product not in subgraph: " + product_id);
    return it->second;
}

namespace {

LocalSubgraph build_subgraph(const AttributeGraph& graph, const std::string& query_id,
                             const std::map<std::string, std::string>& query_edges,
                             const std::vector<std::string>& candidate_ids,
                             std::vector<std::string> attribute_order) {
    std::vector<std::string> missing;
    for (const auto& id : candidate_ids) {
        if (!graph.has_product(id)) missing.push_back(id);
        if (id == query_id) throw Error("query " + query_id + " listed among its candidates");
    }
    if (!missing.empty()) {
        throw NotFoundError("candidates not in graph: " + text::join(missing, ", "));
    }

    LocalSubgraph sub;
    sub.query_id = query_id;
    sub.candidate_ids = candidate_ids;
    sub.attribute_order = std::move(attribute_order);

    sub.edges[query_id] = query_edges;
    for (const auto& [attr, value] : query_edges) {
        sub.attribute_nodes.insert(attr);
        (void)value;
    }
    for (const auto& id : candidate_ids) {
        const auto& edges = graph.attributes_of(id);
        sub.edges[id] = edges;
        for (const auto& [attr, value] : edges) {
            sub.attribute_nodes.insert(attr);
            (void)value;
        }
    }
    return sub;
}

}  // namespace

LocalSubgraph local_subgraph(const AttributeGraph& graph, const std::string& query_id,
                             const std::vector<std::string>& candidate_ids,
                             std::vector<std::string> attribute_order) {
    if (!graph.has_product(query_id)) {
        throw NotFoundError("query not in graph: " + query_id);
    }
    return build_subgraph(graph, query_id, graph.attributes_of(query_id), candidate_ids,
                          std::move(attribute_order));
}

LocalSubgraph local_subgraph(const AttributeGraph& graph,
                             const extraction::AttributeSet& query_set,
                             const std::vector<std::string>& candidate_ids,
                             std::vector<std::string> attribute_order) {
    const auto& query_edges = graph.has_product(query_set.product_id)
                                  ? graph.attributes_of(query_set.product_id)
                                  : query_set.pairs;
    return build_subgraph(graph, query_set.product_id, query_edges, candidate_ids,
                          std::move(attribute_order));
}

std::vector<Triple> shared_triples(const LocalSubgraph& subgraph,
                                   const std::string& candidate_id) {
    const auto& candidate_edges = subgraph.attributes_of(candidate_id);  // throws if absent
    const auto& query_edges = subgraph.attributes_of(subgraph.query_id);

    // Schema-ordered attributes first, remaining (discovered) lexicographic.
    std::vector<std::string> ordered;
    std::set<std::string> emitted;
    for (const auto& attr : subgraph.attribute_order) {
        if (query_edges.count(attr) > 0 && emitted.insert(attr).second) {
            ordered.push_back(attr);
        }
    }
    for (const auto& [attr, value] : query_edges) {
        (void)value;
        if (emitted.insert(attr).second) ordered.push_back(attr);
    }

    std::vector<Triple> triples;
    triples.reserve(ordered.size());
    for (const auto& attr : ordered) {
        Triple t;
        t.attribute = attr;
        t.query_value = query_edges.at(attr);
        if (auto it = candidate_edges.find(attr); it != candidate_edges.end()) {
            t.candidate_value = it->second;
        }
        triples.push_back(std::move(t));
    }
    return triples;
}

}  // namespace graphrank::graph
