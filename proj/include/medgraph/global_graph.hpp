#pragma once

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "medgraph/clustering.hpp"
#include "medgraph/triples.hpp"

namespace mg {

inline std::string code_key(const MedicalCode& c) {
    return std::string(to_string(c.category)) + ":" + c.id;
}

struct GlobalGraph {
    struct Edge {
        std::size_t a = 0;
        std::size_t type = 0;
        std::size_t b = 0;
        bool operator<(const Edge& o) const {
            return std::tie(a, type, b) < std::tie(o.a, o.type, o.b);
        }
        bool operator==(const Edge& o) const { return a == o.a && type == o.type && b == o.b; }
    };
    struct CodeSubgraph {
        std::vector<std::size_t> nodes;  // node cluster ids, sorted
        std::vector<std::size_t> edges;  // indices into `edges`, sorted
        std::size_t anchor = 0;          // cluster holding the code's name string
    };

    std::size_t dim = 0;                              // embedding width w
    std::vector<std::string> node_labels;             // representative member string
    std::vector<std::vector<double>> node_emb;        // M x w cluster centroids
    std::vector<std::string> edge_labels;
    std::vector<std::vector<double>> edge_emb;        // |C_E| x w
    std::vector<Edge> edges;                          // deduplicated clustered triples
    std::map<std::string, CodeSubgraph> code_subgraphs;  // keyed by code_key()

    std::size_t node_count() const { return node_emb.size(); }
    std::size_t edge_type_count() const { return edge_emb.size(); }
};

// Maps every raw triple through the node/edge cluster assignments and folds
// the result into one graph. `node_vocab`/`edge_vocab` list the strings in
// the order the assignments were computed on; the node vocabulary must
// contain each code's own (normalized) name so an anchor always resolves.
inline GlobalGraph build_global_graph(const std::vector<ConceptKg>& concept_kgs,
                                      const std::vector<std::string>& node_vocab,
                                      const ClusterAssignment& node_clusters,
                                      const std::vector<std::string>& edge_vocab,
                                      const ClusterAssignment& edge_clusters) {
    std::unordered_map<std::string, std::size_t> node_of, edge_of;
    for (std::size_t i = 0; i < node_vocab.size(); ++i) node_of[node_vocab[i]] = node_clusters.member_to_cluster[i];
    for (std::size_t i = 0; i < edge_vocab.size(); ++i) edge_of[edge_vocab[i]] = edge_clusters.member_to_cluster[i];

    auto node_cluster = [&](const std::string& s) {
        auto it = node_of.find(s);
        if (it == node_of.end()) throw Error("unassigned node string: " + s);
        return it->second;
    };
    auto edge_cluster = [&](const std::string& s) {
        auto it = edge_of.find(s);
        if (it == edge_of.end()) throw Error("unassigned relation string: " + s);
        return it->second;
    };

    GlobalGraph g;
    g.node_emb = node_clusters.centroids;
    g.edge_emb = edge_clusters.centroids;
    g.dim = g.node_emb.empty() ? 0 : g.node_emb[0].size();
    g.node_labels.resize(node_clusters.size());
    for (std::size_t c = 0; c < node_clusters.size(); ++c)
        g.node_labels[c] = node_vocab[node_clusters.clusters[c].front()];
    g.edge_labels.resize(edge_clusters.size());
    for (std::size_t c = 0; c < edge_clusters.size(); ++c)
        g.edge_labels[c] = edge_vocab[edge_clusters.clusters[c].front()];

    std::map<GlobalGraph::Edge, std::size_t> edge_index;
    for (const auto& kg : concept_kgs) {
        GlobalGraph::CodeSubgraph sub;
        std::set<std::size_t> nodes, eids;
        nodes.insert(node_cluster(normalize_term(kg.code.id)));
        for (const auto& t : kg.triples) {
            GlobalGraph::Edge e{node_cluster(t.head), edge_cluster(t.relation), node_cluster(t.tail)};
            auto [it, fresh] = edge_index.try_emplace(e, g.edges.size());
            if (fresh) g.edges.push_back(e);
            eids.insert(it->second);
            nodes.insert(e.a);
            nodes.insert(e.b);
        }
        sub.nodes.assign(nodes.begin(), nodes.end());
        sub.edges.assign(eids.begin(), eids.end());
        sub.anchor = node_cluster(normalize_term(kg.code.id));
        g.code_subgraphs[code_key(kg.code)] = std::move(sub);
    }
    return g;
}

// Convenience front end: derives vocabularies from the concept KGs, fetches
// embeddings, clusters nodes and relations, then builds the graph.
inline GlobalGraph cluster_and_build(const std::vector<ConceptKg>& concept_kgs,
                                     const EmbeddingProvider& provider, double delta,
                                     Linkage linkage = Linkage::average) {
    std::set<std::string> node_set, edge_set;
    for (const auto& kg : concept_kgs) {
        node_set.insert(normalize_term(kg.code.id));
        for (const auto& t : kg.triples) {
            node_set.insert(t.head);
            node_set.insert(t.tail);
            edge_set.insert(t.relation);
        }
    }
    std::vector<std::string> node_vocab(node_set.begin(), node_set.end());
    std::vector<std::string> edge_vocab(edge_set.begin(), edge_set.end());
    std::vector<std::vector<double>> node_embs, edge_embs;
    node_embs.reserve(node_vocab.size());
    for (const auto& s : node_vocab) node_embs.push_back(provider.get(s));
    edge_embs.reserve(edge_vocab.size());
    for (const auto& s : edge_vocab) edge_embs.push_back(provider.get(s));

    ClusterAssignment nodes = agglomerative_cluster(node_embs, delta, linkage);
    ClusterAssignment rels = edge_vocab.empty()
                                 ? ClusterAssignment{}
                                 : agglomerative_cluster(edge_embs, delta, linkage);
    return build_global_graph(concept_kgs, node_vocab, nodes, edge_vocab, rels);
}

// --- persistence: JSON metadata next to a raw little-endian f64 block file ---

namespace detail {

inline void write_f64_block(std::FILE* f, const std::vector<std::vector<double>>& rows) {
    for (const auto& r : rows)
        if (std::fwrite(r.data(), sizeof(double), r.size(), f) != r.size())
            throw IoError("short write on embedding block");
}

inline std::vector<std::vector<double>> read_f64_block(std::FILE* f, std::size_t n, std::size_t w) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(w));
    for (auto& r : rows)
        if (std::fread(r.data(), sizeof(double), w, f) != w)
            throw IoError("short read on embedding block");
    return rows;
}

}  // namespace detail

inline std::string sibling_bin_path(const std::string& json_path) {
    auto dotpos = json_path.rfind('.');
    std::string stem = (dotpos == std::string::npos) ? json_path : json_path.substr(0, dotpos);
    return stem + ".bin";
}

inline void save_global_graph(const GlobalGraph& g, const std::string& json_path) {
    nlohmann::json j;
    j["version"] = 1;
    j["dim"] = g.dim;
    j["node_count"] = g.node_count();
    j["edge_type_count"] = g.edge_type_count();
    j["node_labels"] = g.node_labels;
    j["edge_labels"] = g.edge_labels;
    auto& edges = j["edges"] = nlohmann::json::array();
    for (const auto& e : g.edges) edges.push_back({e.a, e.type, e.b});
    auto& subs = j["code_subgraphs"] = nlohmann::json::object();
    for (const auto& [k, sub] : g.code_subgraphs)
        subs[k] = {{"nodes", sub.nodes}, {"edges", sub.edges}, {"anchor", sub.anchor}};

    std::ofstream jf(json_path, std::ios::binary);
    if (!jf) throw IoError("cannot open for write: " + json_path);
    jf << j.dump(2) << '\n';

    std::FILE* bf = std::fopen(sibling_bin_path(json_path).c_str(), "wb");
    if (!bf) throw IoError("cannot open for write: " + sibling_bin_path(json_path));
    detail::write_f64_block(bf, g.node_emb);
    detail::write_f64_block(bf, g.edge_emb);
    std::fclose(bf);
}

inline GlobalGraph load_global_graph(const std::string& json_path) {
    std::ifstream jf(json_path, std::ios::binary);
    if (!jf) throw IoError("cannot open: " + json_path);
    nlohmann::json j = nlohmann::json::parse(jf);

    GlobalGraph g;
    g.dim = j.at("dim").get<std::size_t>();
    g.node_labels = j.at("node_labels").get<std::vector<std::string>>();
    g.edge_labels = j.at("edge_labels").get<std::vector<std::string>>();
    for (const auto& e : j.at("edges"))
        g.edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<std::size_t>()});
    for (const auto& [k, sub] : j.at("code_subgraphs").items()) {
        GlobalGraph::CodeSubgraph s;
        s.nodes = sub.at("nodes").get<std::vector<std::size_t>>();
        s.edges = sub.at("edges").get<std::vector<std::size_t>>();
        s.anchor = sub.at("anchor").get<std::size_t>();
        g.code_subgraphs[k] = std::move(s);
    }
    std::size_t nc = j.at("node_count").get<std::size_t>();
    std::size_t ec = j.at("edge_type_count").get<std::size_t>();
    std::FILE* bf = std::fopen(sibling_bin_path(json_path).c_str(), "rb");
    if (!bf) throw IoError("cannot open: " + sibling_bin_path(json_path));
    g.node_emb = detail::read_f64_block(bf, nc, g.dim);
    g.edge_emb = detail::read_f64_block(bf, ec, g.dim);
    std::fclose(bf);
    return g;
}

}  // namespace mg
